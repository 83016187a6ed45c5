//! ROUGE-L, BLEU and METEOR over whole-document token sequences.

mod bleu;
mod meteor;
mod rouge;

pub use bleu::{bleu, DEFAULT_MAX_N};
pub use meteor::{load_synonyms, meteor, meteor_alignment, parse_synonyms, Alignment, SynonymTable};
pub use rouge::{lcs_len, rouge_l};

use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedDoc;

/// Precision, recall and their harmonic mean (0 when both are 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Self { precision, recall, f1 }
    }

    pub const ZERO: Prf = Prf { precision: 0.0, recall: 0.0, f1: 0.0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LexicalScores {
    pub rouge_l: Prf,
    pub bleu: f64,
    pub meteor: f64,
}

pub fn lexical_scores(candidate: &TokenizedDoc, reference: &TokenizedDoc, synonyms: &SynonymTable) -> LexicalScores {
    LexicalScores {
        rouge_l: rouge_l(candidate, reference),
        bleu: bleu(candidate, reference, DEFAULT_MAX_N),
        meteor: meteor(candidate, reference, synonyms),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn bounded_and_degrading(words in prop::collection::vec(0u8..10, 1..25)) {
            let full = TokenizedDoc::new(words.iter().map(|w| format!("w{w}")).collect());
            let mut short = full.clone();
            short.tokens.pop();
            let syn = SynonymTable::new();
            let best = lexical_scores(&full, &full, &syn);
            let worse = lexical_scores(&short, &full, &syn);
            prop_assert_eq!(best.rouge_l.f1, 1.0);
            prop_assert!((best.bleu - 1.0).abs() < 1e-12 || full.len() < DEFAULT_MAX_N);
            let m = full.len() as f64;
            prop_assert!((best.meteor - (1.0 - 0.5 / m.powi(3))).abs() < 1e-12);
            prop_assert!(worse.rouge_l.f1 <= best.rouge_l.f1);
            prop_assert!(worse.bleu <= best.bleu + 1e-12);
            prop_assert!(worse.meteor <= best.meteor);
            for s in [best, worse] {
                for v in [s.rouge_l.precision, s.rouge_l.recall, s.rouge_l.f1, s.bleu, s.meteor] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
        }
    }
}
