use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Stoplist, TokenizedDoc};

use super::DivergenceError;

/// Raw-count TF times `ln(N / df)`. Every non-stopword token of the document
/// has an entry, including those whose weight is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdfVector {
    pub weights: BTreeMap<String, f64>,
    pub doc_length: usize,
}

impl TfIdfVector {
    pub fn contains(&self, term: &str) -> bool {
        self.weights.contains_key(term)
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.weights.get(term).copied().unwrap_or(0.0)
    }
}

pub fn tfidf_corpus(docs: &[TokenizedDoc], stoplist: &Stoplist) -> Result<Vec<TfIdfVector>, DivergenceError> {
    if docs.len() < 2 {
        return Err(DivergenceError::CorpusTooSmall(docs.len()));
    }
    let counts: Vec<BTreeMap<&str, usize>> = docs
        .iter()
        .map(|d| {
            let mut m = BTreeMap::new();
            for t in d.tokens.iter().filter(|t| !stoplist.contains(t.as_str())) {
                *m.entry(t.as_str()).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for m in &counts {
        for &t in m.keys() {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let n = docs.len() as f64;
    Ok(counts
        .iter()
        .zip(docs)
        .map(|(m, d)| TfIdfVector {
            weights: m.iter().map(|(&t, &tf)| (t.to_string(), tf as f64 * (n / df[t] as f64).ln())).collect(),
            doc_length: d.len(),
        })
        .collect())
}

/// Terms weighted positively in `a` that do not occur in `b` at all.
pub fn unique_terms(a: &TfIdfVector, b: &TfIdfVector) -> BTreeSet<String> {
    a.weights
        .iter()
        .filter(|(t, &w)| w > 0.0 && !b.contains(t))
        .map(|(t, _)| t.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{default_stoplist, tokenize};
    use proptest::prelude::*;

    fn docs(texts: &[&str]) -> Vec<TokenizedDoc> {
        texts.iter().map(|t| tokenize(t)).collect()
    }

    #[test]
    fn idf_follows_document_frequency() {
        let v = tfidf_corpus(&docs(&["genome genome genome cohort", "cohort trial"]), &Stoplist::new()).unwrap();
        assert_eq!(v[0].weight("cohort"), 0.0);
        assert!(v[0].contains("cohort"));
        assert_eq!(v[0].weight("genome"), 3.0 * 2f64.ln());
        assert_eq!(v[1].weight("trial"), 2f64.ln());
        assert_eq!(v[0].doc_length, 4);
    }

    #[test]
    fn empty_doc_and_stopwords() {
        let v = tfidf_corpus(&docs(&["", "the genome of the cell"]), &default_stoplist()).unwrap();
        assert!(v[0].weights.is_empty());
        assert_eq!(v[1].weights.keys().collect::<Vec<_>>(), vec!["cell", "genome"]);
        assert!(tfidf_corpus(&docs(&["one"]), &Stoplist::new()).is_err());
    }

    #[test]
    fn unique_terms_cases() {
        let v = tfidf_corpus(&docs(&["alpha beta", "alpha beta", "gamma delta", "alpha gamma epsilon"]), &Stoplist::new()).unwrap();
        assert!(unique_terms(&v[0], &v[1]).is_empty());
        let disjoint = unique_terms(&v[0], &v[2]);
        assert_eq!(disjoint, ["alpha", "beta"].iter().map(|s| s.to_string()).collect());
        assert_eq!(unique_terms(&v[3], &v[2]), ["alpha", "epsilon"].iter().map(|s| s.to_string()).collect());
    }

    proptest! {
        #[test]
        fn unique_terms_match_set_difference(
            a in prop::collection::vec(0u8..12, 0..20),
            b in prop::collection::vec(0u8..12, 0..20),
            c in prop::collection::vec(0u8..12, 0..20),
        ) {
            let mk = |v: &Vec<u8>| TokenizedDoc::new(v.iter().map(|x| format!("w{x}")).collect());
            let corpus = vec![mk(&a), mk(&b), mk(&c)];
            let vecs = tfidf_corpus(&corpus, &Stoplist::new()).unwrap();
            let got = unique_terms(&vecs[0], &vecs[1]);
            let set_a: BTreeSet<String> = corpus[0].tokens.iter().cloned().collect();
            let set_b: BTreeSet<String> = corpus[1].tokens.iter().cloned().collect();
            let oracle: BTreeSet<String> = set_a.difference(&set_b).filter(|t| vecs[0].weight(t) > 0.0).cloned().collect();
            prop_assert!(got.iter().all(|t| !set_b.contains(t)));
            prop_assert_eq!(got, oracle);
            for v in &vecs {
                prop_assert!(v.weights.values().all(|&w| w >= 0.0));
            }
        }
    }
}
