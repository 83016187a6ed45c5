//! Syntactic measures over dependency parses supplied as CoNLL-U.
//!
//! Depth counts nodes, so a lone root has depth 1. Ambiguity is the mean
//! length of modifier phrases (adpositional or participial) preceded by at
//! least two nouns or verbs they could attach to.

mod conllu;
mod metrics;

use std::path::{Path, PathBuf};

pub use conllu::{parse_conllu, parse_conllu_str, write_conllu, ConlluToken, ParsedSentence};
pub use metrics::{
    ambiguous_phrases, doc_max_depth, lexical_diversity, max_dep_depth, pos_distribution, syntactic_ambiguity,
    syntactic_complexity, token_depths, AmbiguousPhrase, SyntacticReport,
};

use crate::corpus::Variant;

#[derive(Debug, thiserror::Error)]
pub enum SyntacticError {
    #[error("{}line {line}: {message}", file_prefix(.file))]
    Malformed { file: Option<PathBuf>, line: usize, message: String },
    #[error("{}sentence at line {line}: head cycle through token {token}", file_prefix(.file))]
    Cycle { file: Option<PathBuf>, line: usize, token: usize },
    #[error("{}sentence at line {line}: {count} root tokens", file_prefix(.file))]
    MultipleRoots { file: Option<PathBuf>, line: usize, count: usize },
    #[error("{}sentence at line {line}: no root token", file_prefix(.file))]
    NoRoot { file: Option<PathBuf>, line: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn file_prefix(file: &Option<PathBuf>) -> String {
    file.as_ref().map(|p| format!("{}: ", p.display())).unwrap_or_default()
}

impl SyntacticError {
    fn in_file(mut self, path: &Path) -> Self {
        match &mut self {
            Self::Malformed { file, .. } | Self::Cycle { file, .. } | Self::MultipleRoots { file, .. } | Self::NoRoot { file, .. } => {
                *file = Some(path.to_path_buf())
            }
            Self::Io { .. } => {}
        }
        self
    }
}

/// `<dir>/<researcher_id>.<variant>.conllu`
pub fn conllu_path(dir: &Path, researcher_id: &str, variant: Variant) -> PathBuf {
    dir.join(format!("{researcher_id}.{}.conllu", variant.as_str()))
}
