//! Vocabulary divergence between profiles.
//!
//! Profiles are weighted by TF-IDF over the pooled evaluation corpus, turned
//! into smoothed distributions over a shared support, and compared by KL
//! divergence. Terms a human profile uses but a generated one never does are
//! filtered against the MeSH descriptor vocabulary.

mod kl;
mod mesh;
mod tfidf;

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub use kl::{kl_between, kl_divergence, to_distribution, KlDirection, TermDistribution, DEFAULT_EPSILON};
pub use mesh::{load_mesh_vocabulary, mesh_novelty, normalize_term, parse_mesh_vocabulary, MeshDescriptor, MeshVocabulary};
pub use tfidf::{tfidf_corpus, unique_terms, TfIdfVector};

use crate::xml::XmlError;

#[derive(Debug, thiserror::Error)]
pub enum DivergenceError {
    #[error("TF-IDF needs at least 2 documents, got {0}")]
    CorpusTooSmall(usize),
    #[error("distribution support is empty")]
    EmptySupport,
    #[error("smoothing epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("distributions have different supports")]
    SupportMismatch,
    #[error("MeSH vocabulary is empty")]
    EmptyVocabulary,
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// One output row of the divergence family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceRow {
    pub researcher_id: String,
    pub variant_pair: String,
    pub kl_nats: f64,
    pub unique_term_count: usize,
    pub mesh_novel_count: usize,
}

/// Scores a generated profile against the human one. Unique terms are those
/// of the human profile that the generated profile never uses.
pub fn score_pair(
    machine: &TfIdfVector,
    human: &TfIdfVector,
    human_tokens: &[String],
    direction: KlDirection,
    vocab: Option<&MeshVocabulary>,
) -> Result<(f64, std::collections::BTreeSet<String>, Vec<String>), DivergenceError> {
    let kl = kl_between(machine, human, direction, DEFAULT_EPSILON)?;
    let unique = unique_terms(human, machine);
    let novel = vocab.map(|v| mesh_novelty(&unique, human_tokens, v)).unwrap_or_default();
    Ok((kl, unique, novel))
}

pub fn write_divergence_csv<W: Write>(w: W, rows: &[DivergenceRow]) -> csv::Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(["researcher_id", "variant_pair", "kl_nats", "unique_term_count", "mesh_novel_count"])?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
