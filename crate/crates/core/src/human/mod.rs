//! Likert rating tables and inter-rater agreement.
//!
//! Ratings are loaded from CSV, one row per (faculty, rater, variant).
//! Agreement is Gwet's AC1 over nominal categories; items are grouped as
//! described by [`Pooling`], and items can be stratified by their majority
//! overall-impression band.

mod agreement;
mod ratings;

use std::path::{Path, PathBuf};

pub use agreement::{gwet_ac1, item_band, pooled_ac1, rating_items, stratified_ac1, AgreementResult, Band, Pooling};
pub use ratings::{
    favourable_count, identified_as_human_count, is_favourable, load_ratings, load_ratings_dir, read_ratings,
    summary_percentages, write_ratings, Dimension, RatingRecord, GRANULARITY_LABELS, QUALITY_LABELS,
};

#[derive(Debug, thiserror::Error)]
pub enum HumanEvalError {
    #[error("{}row {row}: {message}", .file.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default())]
    Row { file: Option<PathBuf>, row: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("agreement: {0}")]
    Agreement(String),
    #[error("no items fall in the {0} band")]
    EmptyBand(Band),
}

impl HumanEvalError {
    fn in_file(self, path: &Path) -> Self {
        match self {
            Self::Row { row, message, .. } => Self::Row { file: Some(path.to_path_buf()), row, message },
            other => other,
        }
    }
}
