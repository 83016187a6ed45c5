use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use crate::corpus::{stem, TokenizedDoc};

/// Flat synonym lexicon: two distinct words match when they share a synset id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymTable {
    synsets: HashMap<String, BTreeSet<String>>,
}

impl SynonymTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, word: &str, synset: &str) {
        self.synsets.entry(word.to_lowercase()).or_default().insert(synset.to_string());
    }

    pub fn len(&self) -> usize {
        self.synsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.synsets.is_empty()
    }

    pub fn are_synonyms(&self, a: &str, b: &str) -> bool {
        match (self.synsets.get(a), self.synsets.get(b)) {
            (Some(x), Some(y)) => x.intersection(y).next().is_some(),
            _ => false,
        }
    }
}

/// Parses `word<TAB>synset_id` lines. Blank lines and `#` comments are skipped.
pub fn parse_synonyms(text: &str) -> Result<SynonymTable, String> {
    let mut table = SynonymTable::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('\t') {
            Some((w, s)) if !w.trim().is_empty() && !s.trim().is_empty() => table.insert(w.trim(), s.trim()),
            _ => return Err(format!("line {}: expected word<TAB>synset_id", i + 1)),
        }
    }
    Ok(table)
}

pub fn load_synonyms(path: &Path) -> Result<SynonymTable, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_synonyms(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// Candidate-to-reference unigram alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub pairs: Vec<Option<usize>>,
    pub matches: usize,
    pub chunks: usize,
}

const BEAM_WIDTH: usize = 128;
const NONE: u32 = u32::MAX;

pub(crate) fn count_chunks(pairs: &[Option<usize>]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<usize> = None;
    for &p in pairs {
        if let Some(j) = p {
            if !matches!(prev, Some(q) if q + 1 == j) {
                chunks += 1;
            }
        }
        prev = p;
    }
    chunks
}

#[derive(Clone)]
struct State {
    used: Vec<u32>,
    prev: u32,
    matches: usize,
    chunks: usize,
    path: Vec<u32>,
}

impl State {
    /// Better states first: more matches, fewer chunks, then the
    /// lexicographically smaller path (unmatched sorts last).
    fn rank(&self, other: &Self) -> Ordering {
        other.matches.cmp(&self.matches).then(self.chunks.cmp(&other.chunks)).then_with(|| self.path.cmp(&other.path))
    }
}

/// One alignment stage: keeps `fixed` pairs and adds the largest set of new
/// pairs allowed by `options`, preferring fewer chunks overall.
fn align_stage(fixed: &[Option<usize>], options: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut states = vec![State { used: vec![], prev: NONE, matches: 0, chunks: 0, path: vec![] }];
    for (i, opts) in options.iter().enumerate() {
        let mut next: HashMap<(Vec<u32>, u32), State> = HashMap::new();
        let mut push = |s: State| {
            let key = (s.used.clone(), s.prev);
            match next.get(&key) {
                Some(cur) if cur.rank(&s) != Ordering::Greater => {}
                _ => {
                    next.insert(key, s);
                }
            }
        };
        for s in &states {
            let step = |j: u32, fresh: bool| {
                let mut t = s.clone();
                if s.prev == NONE || s.prev + 1 != j {
                    t.chunks += 1;
                }
                if fresh {
                    t.matches += 1;
                    let pos = t.used.binary_search(&j).unwrap_err();
                    t.used.insert(pos, j);
                }
                t.prev = j;
                t.path.push(j);
                t
            };
            if let Some(j) = fixed[i] {
                push(step(j as u32, false));
                continue;
            }
            for &j in opts {
                let j = j as u32;
                if s.used.binary_search(&j).is_err() {
                    push(step(j, true));
                }
            }
            let mut t = s.clone();
            t.prev = NONE;
            t.path.push(NONE);
            push(t);
        }
        states = next.into_values().collect();
        states.sort_by(State::rank);
        states.truncate(BEAM_WIDTH);
    }
    states[0].path.iter().map(|&j| (j != NONE).then_some(j as usize)).collect()
}

/// Staged alignment: exact forms, then Porter stems, then synonyms.
pub fn meteor_alignment(candidate: &[String], reference: &[String], synonyms: &SynonymTable) -> Alignment {
    let cand_stems: Vec<String> = candidate.iter().map(|t| stem(t)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|t| stem(t)).collect();
    let mut pairs: Vec<Option<usize>> = vec![None; candidate.len()];
    for stage in 0..3 {
        if stage == 2 && synonyms.is_empty() {
            break;
        }
        let ref_taken: Vec<bool> = {
            let mut v = vec![false; reference.len()];
            pairs.iter().flatten().for_each(|&j| v[j] = true);
            v
        };
        let options: Vec<Vec<usize>> = (0..candidate.len())
            .map(|i| {
                if pairs[i].is_some() {
                    return vec![];
                }
                (0..reference.len())
                    .filter(|&j| !ref_taken[j])
                    .filter(|&j| match stage {
                        0 => candidate[i] == reference[j],
                        1 => cand_stems[i] == ref_stems[j],
                        _ => synonyms.are_synonyms(&candidate[i], &reference[j]),
                    })
                    .collect()
            })
            .collect();
        if options.iter().all(Vec::is_empty) {
            continue;
        }
        pairs = align_stage(&pairs, &options);
    }
    let matches = pairs.iter().flatten().count();
    let chunks = count_chunks(&pairs);
    Alignment { pairs, matches, chunks }
}

pub(crate) fn meteor_from_counts(matches: usize, chunks: usize, cand_len: usize, ref_len: usize) -> f64 {
    if matches == 0 {
        return 0.0;
    }
    let m = matches as f64;
    let p = m / cand_len as f64;
    let r = m / ref_len as f64;
    let fmean = 10.0 * p * r / (r + 9.0 * p);
    let penalty = 0.5 * (chunks as f64 / m).powi(3);
    fmean * (1.0 - penalty)
}

pub fn meteor(candidate: &TokenizedDoc, reference: &TokenizedDoc, synonyms: &SynonymTable) -> f64 {
    let a = meteor_alignment(&candidate.tokens, &reference.tokens, synonyms);
    meteor_from_counts(a.matches, a.chunks, candidate.len(), reference.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    fn doc(s: &str) -> TokenizedDoc {
        TokenizedDoc::new(toks(s))
    }

    #[test]
    fn identity_saturates() {
        let d = doc("genomic data drive precision medicine research");
        let m = 6.0f64;
        assert!((meteor(&d, &d, &SynonymTable::new()) - (1.0 - 0.5 / m.powi(3))).abs() < 1e-15);
    }

    #[test]
    fn no_match_is_zero() {
        assert_eq!(meteor(&doc("a b"), &doc("c d"), &SynonymTable::new()), 0.0);
        assert_eq!(meteor(&doc(""), &doc("c d"), &SynonymTable::new()), 0.0);
    }

    #[test]
    fn stem_stage() {
        let a = meteor_alignment(&toks("dogs run"), &toks("dog runs"), &SynonymTable::new());
        assert_eq!(a.pairs, vec![Some(0), Some(1)]);
        assert_eq!((a.matches, a.chunks), (2, 1));
        let v = meteor(&doc("dogs run"), &doc("dog runs"), &SynonymTable::new());
        assert!((v - (1.0 - 0.5 * 0.125)).abs() < 1e-15);
    }

    #[test]
    fn synonym_stage() {
        let syn = parse_synonyms("# test\nillness\ts1\ndisease\ts1\nsickness\ts1\nstudy\ts2\n").unwrap();
        let a = meteor_alignment(&toks("chronic illness"), &toks("chronic disease"), &syn);
        assert_eq!(a.pairs, vec![Some(0), Some(1)]);
        assert!(!syn.are_synonyms("illness", "study"));
        assert!(parse_synonyms("broken line").is_err());
    }

    #[test]
    fn prefers_fewer_chunks() {
        // "the" can align to either occurrence; the second keeps one chunk.
        let a = meteor_alignment(&toks("the cat"), &toks("the dog the cat"), &SynonymTable::new());
        assert_eq!(a.pairs, vec![Some(2), Some(3)]);
        assert_eq!(a.chunks, 1);
    }

    #[test]
    fn chunk_counting() {
        assert_eq!(count_chunks(&[Some(0), Some(1), None, Some(2), Some(5), Some(6)]), 3);
        assert_eq!(count_chunks(&[Some(3), Some(2)]), 2);
        assert_eq!(count_chunks(&[]), 0);
    }

    /// (matches, chunks, reference indices, alignment)
    type Candidate = (usize, usize, Vec<u32>, Vec<Option<usize>>);

    /// Exhaustive staged alignment for tiny inputs.
    fn brute_alignment(c: &[String], r: &[String], syn: &SynonymTable) -> Vec<Option<usize>> {
        let mut pairs: Vec<Option<usize>> = vec![None; c.len()];
        for stage in 0..3 {
            let ok = |i: usize, j: usize| match stage {
                0 => c[i] == r[j],
                1 => stem(&c[i]) == stem(&r[j]),
                _ => syn.are_synonyms(&c[i], &r[j]),
            };
            let mut best: Option<Candidate> = None;
            fn rec(
                i: usize,
                cur: &mut Vec<Option<usize>>,
                used: &mut Vec<bool>,
                fixed: &[Option<usize>],
                ok: &dyn Fn(usize, usize) -> bool,
                best: &mut Option<Candidate>,
            ) {
                if i == cur.len() {
                    let m = cur.iter().flatten().count();
                    let ch = count_chunks(cur);
                    let key: Vec<u32> = cur.iter().map(|p| p.map_or(u32::MAX, |j| j as u32)).collect();
                    let better = match best {
                        None => true,
                        Some((bm, bc, bk, _)) => (m, std::cmp::Reverse(ch), std::cmp::Reverse(&key)) > (*bm, std::cmp::Reverse(*bc), std::cmp::Reverse(bk)),
                    };
                    if better {
                        *best = Some((m, ch, key, cur.clone()));
                    }
                    return;
                }
                if fixed[i].is_some() {
                    cur[i] = fixed[i];
                    rec(i + 1, cur, used, fixed, ok, best);
                    return;
                }
                cur[i] = None;
                rec(i + 1, cur, used, fixed, ok, best);
                for j in 0..used.len() {
                    if !used[j] && ok(i, j) {
                        used[j] = true;
                        cur[i] = Some(j);
                        rec(i + 1, cur, used, fixed, ok, best);
                        used[j] = false;
                    }
                }
                cur[i] = None;
            }
            let mut used = vec![false; r.len()];
            pairs.iter().flatten().for_each(|&j| used[j] = true);
            let mut cur = vec![None; c.len()];
            rec(0, &mut cur, &mut used, &pairs.clone(), &ok, &mut best);
            pairs = best.unwrap().3;
        }
        pairs
    }

    const WORDS: [&str; 8] = ["run", "runs", "dog", "dogs", "the", "ill", "sick", "a"];

    proptest! {
        #[test]
        fn matches_exhaustive_oracle(
            c in prop::collection::vec(0usize..8, 0..6),
            r in prop::collection::vec(0usize..8, 0..6),
        ) {
            let syn = parse_synonyms("ill\tx\nsick\tx\n").unwrap();
            let c: Vec<String> = c.iter().map(|&i| WORDS[i].to_string()).collect();
            let r: Vec<String> = r.iter().map(|&i| WORDS[i].to_string()).collect();
            let got = meteor_alignment(&c, &r, &syn);
            let oracle = brute_alignment(&c, &r, &syn);
            prop_assert_eq!(&got.pairs, &oracle);
            let m = oracle.iter().flatten().count();
            let score = meteor(&TokenizedDoc::new(c.clone()), &TokenizedDoc::new(r.clone()), &syn);
            let direct = if m == 0 { 0.0 } else {
                let (p, rr) = (m as f64 / c.len() as f64, m as f64 / r.len() as f64);
                10.0 * p * rr / (rr + 9.0 * p) * (1.0 - 0.5 * (count_chunks(&oracle) as f64 / m as f64).powi(3))
            };
            prop_assert!((score - direct).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&score));
        }
    }
}
