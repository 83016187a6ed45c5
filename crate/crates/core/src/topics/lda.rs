use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenizedDoc;

use super::TopicError;

pub const SNAPSHOT_VERSION: u32 = 1;

/// Sampler settings. `alpha` defaults to `50 / K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub num_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl LdaConfig {
    pub fn new(num_topics: usize) -> Self {
        Self {
            num_topics,
            alpha: 50.0 / num_topics.max(1) as f64,
            beta: 0.01,
            iterations: 500,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<(), TopicError> {
        if self.num_topics < 2 {
            return Err(TopicError::InvalidParameter(format!("K must be at least 2, got {}", self.num_topics)));
        }
        if self.iterations == 0 {
            return Err(TopicError::InvalidParameter("iterations must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) || !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(TopicError::InvalidParameter("alpha and beta must be positive".into()));
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self::new(30)
    }
}

/// Fitted model state. Counts are kept as integers so the snapshot round-trips exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaModel {
    pub version: u32,
    pub num_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    pub vocabulary: Vec<String>,
    pub topic_word_counts: Vec<Vec<u32>>,
    pub doc_topic_counts: Vec<Vec<u32>>,
    /// Final topic assignment of every token, per document.
    pub assignments: Vec<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub doc_labels: Vec<String>,
}

/// Runs collapsed Gibbs sampling. The vocabulary is sorted, so the result
/// depends only on the token sequences, the config, and the seed.
pub fn fit_lda(docs: &[TokenizedDoc], config: &LdaConfig) -> Result<LdaModel, TopicError> {
    config.validate()?;
    let vocab_index: BTreeMap<&str, u32> = {
        let mut words: Vec<&str> = docs.iter().flat_map(|d| d.tokens.iter().map(String::as_str)).collect();
        words.sort_unstable();
        words.dedup();
        words.into_iter().enumerate().map(|(i, w)| (w, i as u32)).collect()
    };
    if vocab_index.is_empty() {
        return Err(TopicError::EmptyVocabulary);
    }
    let words: Vec<Vec<u32>> = docs
        .iter()
        .map(|d| d.tokens.iter().map(|t| vocab_index[t.as_str()]).collect())
        .collect();
    let total: usize = words.iter().map(Vec::len).sum();
    let k = config.num_topics;
    if k > total {
        return Err(TopicError::TooManyTopics { topics: k, tokens: total });
    }
    let v = vocab_index.len();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut nkw = vec![vec![0u32; v]; k];
    let mut nk = vec![0u32; k];
    let mut ndk = vec![vec![0u32; k]; docs.len()];
    let mut z: Vec<Vec<u32>> = Vec::with_capacity(docs.len());
    for (d, doc) in words.iter().enumerate() {
        let mut zd = Vec::with_capacity(doc.len());
        for &w in doc {
            let t = rng.gen_range(0..k);
            nkw[t][w as usize] += 1;
            nk[t] += 1;
            ndk[d][t] += 1;
            zd.push(t as u32);
        }
        z.push(zd);
    }

    let vbeta = v as f64 * config.beta;
    let mut p = vec![0.0f64; k];
    for _ in 0..config.iterations {
        for (d, doc) in words.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let w = w as usize;
                let old = z[d][i] as usize;
                nkw[old][w] -= 1;
                nk[old] -= 1;
                ndk[d][old] -= 1;

                let mut acc = 0.0;
                for t in 0..k {
                    acc += (ndk[d][t] as f64 + config.alpha) * (nkw[t][w] as f64 + config.beta) / (nk[t] as f64 + vbeta);
                    p[t] = acc;
                }
                let u = rng.gen::<f64>() * acc;
                let new = p.iter().position(|&c| u < c).unwrap_or(k - 1);

                nkw[new][w] += 1;
                nk[new] += 1;
                ndk[d][new] += 1;
                z[d][i] = new as u32;
            }
        }
    }

    Ok(LdaModel {
        version: SNAPSHOT_VERSION,
        num_topics: k,
        alpha: config.alpha,
        beta: config.beta,
        iterations: config.iterations,
        seed: config.seed,
        vocabulary: vocab_index.keys().map(|w| w.to_string()).collect(),
        topic_word_counts: nkw,
        doc_topic_counts: ndk,
        assignments: z,
        doc_labels: Vec::new(),
    })
}

impl LdaModel {
    pub fn with_doc_labels(mut self, labels: Vec<String>) -> Self {
        self.doc_labels = labels;
        self
    }

    pub fn num_docs(&self) -> usize {
        self.doc_topic_counts.len()
    }

    /// Argmax of `n_dk + alpha`; ties resolve to the lowest topic.
    pub fn dominant_topic(&self, doc_index: usize) -> usize {
        let row = &self.doc_topic_counts[doc_index];
        let mut best = 0;
        for (t, &c) in row.iter().enumerate() {
            if c as f64 + self.alpha > row[best] as f64 + self.alpha {
                best = t;
            }
        }
        best
    }

    /// Posterior topic proportions of one document.
    pub fn doc_topic_distribution(&self, doc_index: usize) -> Vec<f64> {
        let row = &self.doc_topic_counts[doc_index];
        let n: u32 = row.iter().sum();
        let denom = n as f64 + self.num_topics as f64 * self.alpha;
        row.iter().map(|&c| (c as f64 + self.alpha) / denom).collect()
    }

    /// Highest-weighted words of a topic, ties by vocabulary order.
    pub fn top_words(&self, topic: usize, n: usize) -> Vec<&str> {
        let mut idx: Vec<usize> = (0..self.vocabulary.len()).collect();
        idx.sort_by(|&a, &b| self.topic_word_counts[topic][b].cmp(&self.topic_word_counts[topic][a]).then(a.cmp(&b)));
        idx.into_iter().take(n).map(|i| self.vocabulary[i].as_str()).collect()
    }

    /// Document indices partitioned by dominant topic. Every topic has an entry.
    pub fn group_docs_by_topic(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.num_topics];
        for d in 0..self.num_docs() {
            groups[self.dominant_topic(d)].push(d);
        }
        groups
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = std::collections::HashSet::new();
        if !self.vocabulary.iter().all(|w| seen.insert(w)) {
            return Err("duplicate vocabulary entry".into());
        }
        for (d, (row, z)) in self.doc_topic_counts.iter().zip(&self.assignments).enumerate() {
            if row.iter().sum::<u32>() as usize != z.len() {
                return Err(format!("document {d}: topic counts do not sum to token count"));
            }
        }
        let tw: u64 = self.topic_word_counts.iter().flatten().map(|&c| c as u64).sum();
        let tokens: u64 = self.assignments.iter().map(|z| z.len() as u64).sum();
        if tw != tokens {
            return Err(format!("topic-word counts total {tw}, corpus has {tokens} tokens"));
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), TopicError> {
        serde_json::to_writer(w, self).map_err(TopicError::Json)
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, TopicError> {
        let model: Self = serde_json::from_reader(r).map_err(TopicError::Json)?;
        if model.version != SNAPSHOT_VERSION {
            return Err(TopicError::InvalidParameter(format!("unsupported snapshot version {}", model.version)));
        }
        model.check_invariants().map_err(TopicError::InvalidParameter)?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{any, prop, prop_assert, prop_assert_eq, prop_assume, proptest, ProptestConfig};

    fn synthetic(seed: u64) -> (Vec<TokenizedDoc>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for d in 0..45 {
            let label = d % 3;
            let words: Vec<String> = (0..60)
                .map(|_| {
                    let topic = if rng.gen::<f64>() < 0.9 { label } else { rng.gen_range(0..3) };
                    format!("t{topic}w{}", rng.gen_range(0..12))
                })
                .collect();
            docs.push(TokenizedDoc::new(words));
            labels.push(label);
        }
        (docs, labels)
    }

    /// Each found cluster is credited with its most common true label.
    fn purity(found: &[usize], truth: &[usize], k: usize) -> f64 {
        let mut table = vec![vec![0usize; 3]; k];
        for (&f, &t) in found.iter().zip(truth) {
            table[f][t] += 1;
        }
        table.iter().map(|r| *r.iter().max().unwrap()).sum::<usize>() as f64 / found.len() as f64
    }

    fn small(k: usize) -> LdaConfig {
        LdaConfig::new(k).with_iterations(150).with_seed(7)
    }

    #[test]
    fn recovers_three_synthetic_topics() {
        let (docs, labels) = synthetic(11);
        let model = fit_lda(&docs, &small(3)).unwrap();
        let found: Vec<usize> = (0..docs.len()).map(|d| model.dominant_topic(d)).collect();
        assert!(purity(&found, &labels, 3) >= 0.8);
        let groups = model.group_docs_by_topic();
        let mut grouped: Vec<usize> = groups.concat();
        grouped.sort();
        assert_eq!(grouped, (0..docs.len()).collect::<Vec<_>>());
    }

    #[test]
    fn seeded_refit_is_identical() {
        let (docs, _) = synthetic(3);
        let a = fit_lda(&docs, &small(4)).unwrap();
        let b = fit_lda(&docs, &small(4)).unwrap();
        assert_eq!(a, b);
        let c = fit_lda(&docs, &small(4).with_seed(8)).unwrap();
        assert_ne!(a.assignments, c.assignments);
    }

    #[test]
    fn single_document_conserves_counts() {
        let doc = TokenizedDoc::from_words(&["gene", "cell", "gene", "protein", "tumor"]);
        let m = fit_lda(&[doc], &small(2)).unwrap();
        assert_eq!(m.doc_topic_counts[0].iter().sum::<u32>(), 5);
        m.check_invariants().unwrap();
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(fit_lda(&[TokenizedDoc::new(vec![])], &small(2)), Err(TopicError::EmptyVocabulary)));
        let doc = TokenizedDoc::from_words(&["a", "b"]);
        assert!(matches!(fit_lda(std::slice::from_ref(&doc), &small(3)), Err(TopicError::TooManyTopics { .. })));
        assert!(fit_lda(std::slice::from_ref(&doc), &small(1)).is_err());
        assert!(fit_lda(&[doc], &small(2).with_iterations(0)).is_err());
    }

    fn hand_model(rows: Vec<Vec<u32>>) -> LdaModel {
        let k = rows[0].len();
        let assignments = rows
            .iter()
            .map(|r| r.iter().enumerate().flat_map(|(t, &c)| std::iter::repeat_n(t as u32, c as usize)).collect())
            .collect();
        LdaModel {
            version: SNAPSHOT_VERSION,
            num_topics: k,
            alpha: 50.0 / k as f64,
            beta: 0.01,
            iterations: 1,
            seed: 0,
            vocabulary: vec![],
            topic_word_counts: vec![vec![]; k],
            doc_topic_counts: rows,
            assignments,
            doc_labels: vec![],
        }
    }

    #[test]
    fn dominant_topic_rules() {
        let m = hand_model(vec![vec![0, 0, 6, 0], vec![3, 3, 0, 1], vec![0, 0, 0, 0], vec![1, 4, 4, 2]]);
        assert_eq!(m.dominant_topic(0), 2);
        assert_eq!(m.dominant_topic(1), 0);
        assert_eq!(m.dominant_topic(2), 0);
        assert_eq!(m.dominant_topic(3), 1);
        for d in 0..m.num_docs() {
            let row = &m.doc_topic_counts[d];
            let max = row.iter().max().unwrap();
            let oracle = row.iter().position(|c| c == max).unwrap();
            assert_eq!(m.dominant_topic(d), oracle);
        }
    }

    #[test]
    fn snapshot_round_trips() {
        let (docs, _) = synthetic(5);
        let m = fit_lda(&docs[..6], &small(2).with_iterations(5)).unwrap().with_doc_labels((0..6).map(|i| i.to_string()).collect());
        let mut buf = Vec::new();
        m.write_json(&mut buf).unwrap();
        assert_eq!(LdaModel::read_json(buf.as_slice()).unwrap(), m);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sweeps_conserve_counts(
            docs in prop::collection::vec(prop::collection::vec(0u8..8, 0..15), 1..6),
            k in 2usize..5,
            seed in any::<u64>(),
        ) {
            let docs: Vec<TokenizedDoc> = docs.iter().map(|d| TokenizedDoc::new(d.iter().map(|w| format!("w{w}")).collect())).collect();
            let total: usize = docs.iter().map(TokenizedDoc::len).sum();
            prop_assume!(total >= k);
            let m = fit_lda(&docs, &LdaConfig::new(k).with_iterations(3).with_seed(seed)).unwrap();
            prop_assert!(m.check_invariants().is_ok());
            for (d, doc) in docs.iter().enumerate() {
                prop_assert_eq!(m.doc_topic_counts[d].iter().sum::<u32>() as usize, doc.len());
            }
        }
    }
}
