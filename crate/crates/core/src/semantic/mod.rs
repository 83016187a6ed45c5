//! Greedy-match cosine similarity over externally produced token embeddings.
//!
//! Each candidate token is paired with its most similar reference token and
//! vice versa. No IDF weighting and no baseline rescaling are applied.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::http::{Transport, TransportError};
use crate::lexical::Prf;

/// Tokens dropped by the loaders.
pub const DEFAULT_MARKERS: [&str; 2] = ["[CLS]", "[SEP]"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenEmbeddings {
    pub tokens: Vec<String>,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, thiserror::Error)]
pub enum SemanticError {
    #[error("embeddings are empty")]
    Empty,
    #[error("{tokens} tokens but {vectors} vectors")]
    LengthMismatch { tokens: usize, vectors: usize },
    #[error("vector {index} has dimension {found}, expected {expected}")]
    Dimension { index: usize, expected: usize, found: usize },
    #[error("vector {index} contains a non-finite component")]
    NonFinite { index: usize },
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("embedding response: {0}")]
    Response(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

impl TokenEmbeddings {
    /// Checks shape, a consistent non-zero dimension, and finiteness.
    pub fn validate(&self, expected_dim: Option<usize>) -> Result<usize, SemanticError> {
        if self.tokens.len() != self.vectors.len() {
            return Err(SemanticError::LengthMismatch { tokens: self.tokens.len(), vectors: self.vectors.len() });
        }
        if self.vectors.is_empty() {
            return Err(SemanticError::Empty);
        }
        let dim = expected_dim.unwrap_or(self.vectors[0].len());
        if dim == 0 {
            return Err(SemanticError::Dimension { index: 0, expected: 1, found: 0 });
        }
        for (index, v) in self.vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(SemanticError::Dimension { index, expected: dim, found: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(SemanticError::NonFinite { index });
            }
        }
        Ok(dim)
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub fn without_markers(mut self, markers: &[&str]) -> Self {
        let keep: Vec<bool> = self.tokens.iter().map(|t| !markers.contains(&t.as_str())).collect();
        let mut k = keep.iter();
        self.tokens.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        self.vectors.retain(|_| *k.next().unwrap());
        self
    }
}

fn unit(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / norm).collect()
    }
}

/// Cosine similarity matrix, candidate rows by reference columns. Zero
/// vectors have similarity 0 with everything.
pub fn similarity_matrix(candidate: &TokenEmbeddings, reference: &TokenEmbeddings) -> Result<Vec<Vec<f64>>, SemanticError> {
    let dim = candidate.validate(None)?;
    reference.validate(Some(dim))?;
    let c: Vec<Vec<f64>> = candidate.vectors.iter().map(|v| unit(v)).collect();
    let r: Vec<Vec<f64>> = reference.vectors.iter().map(|v| unit(v)).collect();
    Ok(c.iter().map(|a| r.iter().map(|b| a.iter().zip(b).map(|(x, y)| x * y).sum()).collect()).collect())
}

/// Precision is the mean over candidate rows of the row maximum; recall the
/// mean over reference columns of the column maximum.
pub fn greedy_from_matrix(sim: &[Vec<f64>]) -> Prf {
    let rows = sim.len();
    let cols = sim.first().map_or(0, Vec::len);
    let p = sim.iter().map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / rows as f64;
    let r = (0..cols).map(|j| sim.iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max)).sum::<f64>() / cols as f64;
    Prf::new(p, r)
}

pub fn greedy_match_score(candidate: &TokenEmbeddings, reference: &TokenEmbeddings) -> Result<Prf, SemanticError> {
    Ok(greedy_from_matrix(&similarity_matrix(candidate, reference)?))
}

#[derive(Deserialize)]
struct EmbeddingFile {
    dim: Option<usize>,
    tokens: Vec<String>,
    vectors: Vec<Vec<f64>>,
}

fn from_json(text: &str) -> Result<(TokenEmbeddings, Option<usize>), String> {
    let f: EmbeddingFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    Ok((TokenEmbeddings { tokens: f.tokens, vectors: f.vectors }, f.dim))
}

/// Reads `{"dim": int, "tokens": [...], "vectors": [[...]]}`.
pub fn load_embeddings(path: &Path) -> Result<TokenEmbeddings, SemanticError> {
    let err = |message: String| SemanticError::File { path: path.to_path_buf(), message };
    let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    let (emb, dim) = from_json(&text).map_err(err)?;
    let emb = emb.without_markers(&DEFAULT_MARKERS);
    emb.validate(dim)?;
    Ok(emb)
}

/// POSTs `{"text": ...}` and validates the `{"tokens", "vectors"}` reply.
pub fn fetch_embeddings(transport: &dyn Transport, endpoint: &str, text: &str) -> Result<TokenEmbeddings, SemanticError> {
    let body = serde_json::json!({ "text": text }).to_string();
    let reply = transport.post_json(endpoint, &body, &[])?;
    let (emb, dim) = from_json(&reply).map_err(SemanticError::Response)?;
    let emb = emb.without_markers(&DEFAULT_MARKERS);
    emb.validate(dim)?;
    Ok(emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn emb(vectors: Vec<Vec<f64>>) -> TokenEmbeddings {
        TokenEmbeddings { tokens: (0..vectors.len()).map(|i| format!("t{i}")).collect(), vectors }
    }

    #[test]
    fn identity_and_orthogonal() {
        let a = emb(vec![vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 1.0]]);
        let s = greedy_match_score(&a, &a).unwrap();
        assert!((s.precision - 1.0).abs() < 1e-12 && (s.recall - 1.0).abs() < 1e-12 && (s.f1 - 1.0).abs() < 1e-12);
        let x = emb(vec![vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]);
        let y = emb(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 3.0]]);
        assert_eq!(greedy_match_score(&x, &y).unwrap(), Prf::ZERO);
    }

    #[test]
    fn two_by_two_hand_case() {
        let s = greedy_from_matrix(&[vec![1.0, 0.0], vec![0.6, 0.8]]);
        assert!((s.precision - 0.9).abs() < 1e-15);
        assert!((s.recall - 0.9).abs() < 1e-15);
        assert!((s.f1 - 0.9).abs() < 1e-15);
        // The same matrix produced from vectors.
        let c = emb(vec![vec![1.0, 0.0], vec![0.6, 0.8]]);
        let r = emb(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let v = greedy_match_score(&c, &r).unwrap();
        assert!((v.f1 - 0.9).abs() < 1e-12);
    }

    #[test]
    fn validation_errors() {
        let bad = TokenEmbeddings { tokens: vec!["a".into()], vectors: vec![] };
        assert!(matches!(bad.validate(None), Err(SemanticError::LengthMismatch { .. })));
        assert!(matches!(emb(vec![]).validate(None), Err(SemanticError::Empty)));
        assert!(matches!(emb(vec![vec![1.0], vec![1.0, 2.0]]).validate(None), Err(SemanticError::Dimension { index: 1, .. })));
        assert!(matches!(emb(vec![vec![f64::NAN]]).validate(None), Err(SemanticError::NonFinite { .. })));
        assert!(greedy_match_score(&emb(vec![vec![1.0]]), &emb(vec![vec![1.0, 0.0]])).is_err());
    }

    #[test]
    fn loader_drops_markers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.json");
        std::fs::write(&p, r#"{"dim":2,"tokens":["[CLS]","gene","cell","[SEP]"],"vectors":[[0,0],[1,0],[0,1],[0,0]]}"#).unwrap();
        let e = load_embeddings(&p).unwrap();
        assert_eq!(e.tokens, vec!["gene", "cell"]);
        std::fs::write(&p, r#"{"dim":3,"tokens":["a"],"vectors":[[1,0]]}"#).unwrap();
        assert!(load_embeddings(&p).is_err());
    }

    struct Canned(Result<String, u16>);

    impl Transport for Canned {
        fn get(&self, url: &str) -> Result<String, TransportError> {
            self.post_json(url, "", &[])
        }
        fn post_json(&self, url: &str, _: &str, _: &[(String, String)]) -> Result<String, TransportError> {
            self.0.clone().map_err(|status| TransportError::Status { url: url.into(), status, body: String::new() })
        }
    }

    #[test]
    fn fetch_from_replay_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let replay = crate::http::ReplayTransport::new(dir.path(), "json");
        let url = "http://localhost:9/embed";
        let body = serde_json::json!({ "text": "gene cell" }).to_string();
        std::fs::write(replay.fixture_path(url, Some(&body)), r#"{"tokens":["gene","cell"],"vectors":[[1,0],[0,1]]}"#).unwrap();
        assert_eq!(fetch_embeddings(&replay, url, "gene cell").unwrap().tokens, vec!["gene", "cell"]);
        assert!(matches!(fetch_embeddings(&Canned(Err(500)), url, "x"), Err(SemanticError::Transport(_))));
        let short = Canned(Ok(r#"{"tokens":["a","b"],"vectors":[[1]]}"#.into()));
        assert!(matches!(fetch_embeddings(&short, url, "x"), Err(SemanticError::LengthMismatch { .. })));
    }

    fn vecs(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-1.0f64..1.0, d), 1..n)
    }

    proptest! {
        #[test]
        fn swap_scale_and_permutation((c, r) in (2usize..5).prop_flat_map(|d| (vecs(6, d), vecs(6, d))), k in 0.01f64..100.0, rot in 0usize..6) {
            let (c, r) = (emb(c), emb(r));
            let s = greedy_match_score(&c, &r).unwrap();
            let swapped = greedy_match_score(&r, &c).unwrap();
            prop_assert_eq!(s.precision, swapped.recall);
            let scaled = |e: &TokenEmbeddings| emb(e.vectors.iter().map(|v| v.iter().map(|x| x * k).collect()).collect());
            let t = greedy_match_score(&scaled(&c), &scaled(&r)).unwrap();
            prop_assert!((s.f1 - t.f1).abs() < 1e-9 && (s.precision - t.precision).abs() < 1e-9);
            let mut perm = r.vectors.clone();
            let n = perm.len();
            perm.rotate_left(rot % n);
            let u = greedy_match_score(&c, &emb(perm)).unwrap();
            prop_assert!((s.f1 - u.f1).abs() < 1e-9);
        }
    }
}
