use crate::corpus::TokenizedDoc;

use super::Prf;

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}

pub fn rouge_l(candidate: &TokenizedDoc, reference: &TokenizedDoc) -> Prf {
    if candidate.is_empty() || reference.is_empty() {
        return Prf::ZERO;
    }
    let l = lcs_len(&candidate.tokens, &reference.tokens) as f64;
    Prf::new(l / candidate.len() as f64, l / reference.len() as f64)
}
