use std::collections::HashMap;

use crate::corpus::TokenizedDoc;

pub const DEFAULT_MAX_N: usize = 4;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut m = HashMap::new();
    for w in tokens.windows(n) {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// Single-reference BLEU. An order n >= 2 with no clipped match scores
/// `1 / (total + 1)`; an empty candidate or no unigram match scores 0.
pub fn bleu(candidate: &TokenizedDoc, reference: &TokenizedDoc, max_n: usize) -> f64 {
    assert!(max_n >= 1, "max_n must be at least 1");
    let (c, r) = (&candidate.tokens, &reference.tokens);
    if c.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let cand = ngram_counts(c, n);
        let refs = ngram_counts(r, n);
        let total: usize = cand.values().sum();
        let clipped: usize = cand.iter().map(|(g, &k)| k.min(refs.get(g).copied().unwrap_or(0))).sum();
        let p = if clipped > 0 {
            clipped as f64 / total as f64
        } else if n == 1 {
            return 0.0;
        } else {
            1.0 / (total as f64 + 1.0)
        };
        log_sum += p.ln();
    }
    let bp = if c.len() < r.len() { (1.0 - r.len() as f64 / c.len() as f64).exp() } else { 1.0 };
    bp * (log_sum / max_n as f64).exp()
}
