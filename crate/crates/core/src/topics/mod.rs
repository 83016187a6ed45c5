//! Topic modelling over publication abstracts.
//!
//! [`fit_lda`] runs a seeded collapsed Gibbs sampler. The fitted model groups
//! abstracts for divide-and-conquer generation, and its dominant topics feed
//! the per-researcher diversity score and year heatmap.

mod analysis;
mod lda;

pub use analysis::{
    diversity_score, write_heatmap_csv, write_transitions_csv, year_heatmap, DiversityBand, TopicAssignment,
    YearHeatmap, EVOLVING_ABOVE, STABLE_BELOW,
};
pub use lda::{fit_lda, LdaConfig, LdaModel, SNAPSHOT_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum TopicError {
    #[error("vocabulary is empty after preprocessing")]
    EmptyVocabulary,
    #[error("{topics} topics requested but the corpus has only {tokens} tokens")]
    TooManyTopics { topics: usize, tokens: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("model snapshot: {0}")]
    Json(serde_json::Error),
}
