use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ParsedSentence;

/// Node count on the path from each token to the root (the root itself is 1).
pub fn token_depths(sentence: &ParsedSentence) -> Vec<usize> {
    let heads = sentence.heads();
    let mut depth = vec![0usize; heads.len()];
    fn resolve(i: usize, heads: &[Option<usize>], depth: &mut [usize]) -> usize {
        if depth[i] == 0 {
            depth[i] = match heads[i] {
                None => 1,
                Some(h) => resolve(h, heads, depth) + 1,
            };
        }
        depth[i]
    }
    for i in 0..heads.len() {
        resolve(i, &heads, &mut depth);
    }
    depth
}

pub fn max_dep_depth(sentence: &ParsedSentence) -> usize {
    token_depths(sentence).into_iter().max().unwrap_or(0)
}

/// Deepest sentence of a document.
pub fn doc_max_depth(doc: &[ParsedSentence]) -> usize {
    doc.iter().map(max_dep_depth).max().unwrap_or(0)
}

/// Mean token depth over every token of the document.
pub fn syntactic_complexity(doc: &[ParsedSentence]) -> f64 {
    let (sum, n) = doc.iter().flat_map(token_depths).fold((0usize, 0usize), |(s, n), d| (s + d, n + 1));
    if n == 0 { 0.0 } else { sum as f64 / n as f64 }
}

/// Percentage of tokens carrying each UPOS tag.
pub fn pos_distribution(doc: &[ParsedSentence]) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for t in doc.iter().flat_map(|s| &s.tokens) {
        *counts.entry(t.upos.clone()).or_insert(0) += 1;
    }
    let total: usize = counts.values().sum();
    counts.into_iter().map(|(k, c)| (k, 100.0 * c as f64 / total as f64)).collect()
}

/// Distinct lowercase lemmas per UPOS tag.
pub fn lexical_diversity(doc: &[ParsedSentence]) -> BTreeMap<String, usize> {
    let mut sets: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for t in doc.iter().flat_map(|s| &s.tokens) {
        sets.entry(t.upos.clone()).or_default().insert(t.lemma_key());
    }
    sets.into_iter().map(|(k, s)| (k, s.len())).collect()
}

/// A modifier phrase with more than one plausible attachment site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbiguousPhrase {
    /// 0-based positions of the phrase tokens, ascending.
    pub span: Vec<usize>,
    /// 0-based positions of the candidate heads.
    pub candidates: Vec<usize>,
}

fn is_participial(t: &super::ConlluToken) -> bool {
    t.deprel == "acl"
        || (t.has_feature("VerbForm", "Part") && matches!(t.deprel.as_str(), "amod" | "acl" | "advcl"))
}

/// Modifier phrases are subtrees headed by a token that takes an adposition
/// as its `case` dependent, or by a participial modifier. A phrase is
/// ambiguous when at least two nouns, proper nouns or verbs precede it in
/// the sentence.
pub fn ambiguous_phrases(sentence: &ParsedSentence) -> Vec<AmbiguousPhrase> {
    let heads = sentence.heads();
    let toks = &sentence.tokens;
    let n = toks.len();
    let mut children = vec![Vec::new(); n];
    for (i, h) in heads.iter().enumerate() {
        if let Some(h) = *h {
            children[h].push(i);
        }
    }
    let mut out = Vec::new();
    for h in 0..n {
        let pp = children[h].iter().any(|&c| toks[c].upos == "ADP" && toks[c].deprel.split(':').next() == Some("case"));
        if !(pp || is_participial(&toks[h])) {
            continue;
        }
        let mut span = vec![h];
        let mut stack = vec![h];
        while let Some(x) = stack.pop() {
            for &c in &children[x] {
                span.push(c);
                stack.push(c);
            }
        }
        span.sort_unstable();
        let start = span[0];
        let candidates: Vec<usize> = (0..start).filter(|&i| matches!(toks[i].upos.as_str(), "NOUN" | "PROPN" | "VERB")).collect();
        if candidates.len() >= 2 {
            out.push(AmbiguousPhrase { span, candidates });
        }
    }
    out
}

/// Mean token length of ambiguous phrases in the document, 0 when none.
pub fn syntactic_ambiguity(doc: &[ParsedSentence]) -> f64 {
    let lens: Vec<usize> = doc.iter().flat_map(ambiguous_phrases).map(|p| p.span.len()).collect();
    if lens.is_empty() { 0.0 } else { lens.iter().sum::<usize>() as f64 / lens.len() as f64 }
}

/// All measures for one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntacticReport {
    pub pos_distribution: BTreeMap<String, f64>,
    pub max_dep_depth: f64,
    pub syntactic_complexity: f64,
    pub syntactic_ambiguity: f64,
    pub lexical_diversity: BTreeMap<String, f64>,
    pub token_count: usize,
}

impl SyntacticReport {
    pub fn for_document(doc: &[ParsedSentence]) -> Self {
        Self {
            pos_distribution: pos_distribution(doc),
            max_dep_depth: doc_max_depth(doc) as f64,
            syntactic_complexity: syntactic_complexity(doc),
            syntactic_ambiguity: syntactic_ambiguity(doc),
            lexical_diversity: lexical_diversity(doc).into_iter().map(|(k, v)| (k, v as f64)).collect(),
            token_count: doc.iter().map(ParsedSentence::len).sum(),
        }
    }

    /// Equal-weight mean of per-document reports. Tags missing from a
    /// document count as 0 for that document.
    pub fn mean(reports: &[SyntacticReport]) -> Option<Self> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg_map = |f: fn(&SyntacticReport) -> &BTreeMap<String, f64>| {
            let keys: BTreeSet<&String> = reports.iter().flat_map(|r| f(r).keys()).collect();
            keys.into_iter()
                .map(|k| (k.clone(), reports.iter().map(|r| f(r).get(k).copied().unwrap_or(0.0)).sum::<f64>() / n))
                .collect()
        };
        Some(Self {
            pos_distribution: avg_map(|r| &r.pos_distribution),
            max_dep_depth: reports.iter().map(|r| r.max_dep_depth).sum::<f64>() / n,
            syntactic_complexity: reports.iter().map(|r| r.syntactic_complexity).sum::<f64>() / n,
            syntactic_ambiguity: reports.iter().map(|r| r.syntactic_ambiguity).sum::<f64>() / n,
            lexical_diversity: avg_map(|r| &r.lexical_diversity),
            token_count: reports.iter().map(|r| r.token_count).sum(),
        })
    }
}
