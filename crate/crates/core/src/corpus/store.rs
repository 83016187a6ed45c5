//! JSON Lines persistence: one `{"kind": ...}` object per line.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ProfileDoc, PublicationRecord, Researcher, Variant};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid corpus: {0}")]
    Invalid(String),
}

/// A publication linked to the researcher it was collected for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationEntry {
    pub researcher_id: String,
    #[serde(flatten)]
    pub record: PublicationRecord,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Line {
    Researcher(Researcher),
    Publication(PublicationEntry),
    Profile(ProfileDoc),
}

/// Everything a pipeline run knows about its researchers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub researchers: Vec<Researcher>,
    pub publications: Vec<PublicationEntry>,
    pub profiles: Vec<ProfileDoc>,
}

impl Corpus {
    pub fn is_empty(&self) -> bool {
        self.researchers.is_empty() && self.publications.is_empty() && self.profiles.is_empty()
    }

    pub fn researcher(&self, id: &str) -> Option<&Researcher> {
        self.researchers.iter().find(|r| r.id == id)
    }

    pub fn publications_of<'a>(&'a self, researcher_id: &'a str) -> impl Iterator<Item = &'a PublicationRecord> + 'a {
        self.publications
            .iter()
            .filter(move |p| p.researcher_id == researcher_id)
            .map(|p| &p.record)
    }

    pub fn profile(&self, researcher_id: &str, variant: Variant) -> Option<&ProfileDoc> {
        self.profiles
            .iter()
            .find(|p| p.researcher_id == researcher_id && p.variant == variant)
    }

    /// Inserts a profile, replacing any existing one for the same
    /// (researcher, variant) pair.
    pub fn upsert_profile(&mut self, doc: ProfileDoc) {
        match self
            .profiles
            .iter_mut()
            .find(|p| p.researcher_id == doc.researcher_id && p.variant == doc.variant)
        {
            Some(slot) => *slot = doc,
            None => self.profiles.push(doc),
        }
    }

    /// Profiles grouped by researcher, in researcher order.
    pub fn profiles_by_researcher(&self) -> BTreeMap<&str, BTreeMap<Variant, &ProfileDoc>> {
        let mut out: BTreeMap<&str, BTreeMap<Variant, &ProfileDoc>> = BTreeMap::new();
        for p in &self.profiles {
            out.entry(p.researcher_id.as_str()).or_default().insert(p.variant, p);
        }
        out
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut ids = HashSet::new();
        for r in &self.researchers {
            r.validate().map_err(CorpusError::Invalid)?;
            if !ids.insert(r.id.as_str()) {
                return Err(CorpusError::Invalid(format!("duplicate researcher id '{}'", r.id)));
            }
        }
        let mut pairs = HashSet::new();
        for p in &self.profiles {
            if p.text.trim().is_empty() {
                return Err(CorpusError::Invalid(format!(
                    "empty {} profile for '{}'",
                    p.variant, p.researcher_id
                )));
            }
            if !pairs.insert((p.researcher_id.as_str(), p.variant)) {
                return Err(CorpusError::Invalid(format!(
                    "more than one {} profile for '{}'",
                    p.variant, p.researcher_id
                )));
            }
        }
        Ok(())
    }
}

/// Serializes the corpus: researchers, then publications, then profiles.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut w: W) -> std::io::Result<()> {
    let lines = corpus
        .researchers
        .iter()
        .cloned()
        .map(Line::Researcher)
        .chain(corpus.publications.iter().cloned().map(Line::Publication))
        .chain(corpus.profiles.iter().cloned().map(Line::Profile));
    for line in lines {
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_err)?;
    }
    let file = File::create(path).map_err(io_err)?;
    write_corpus(corpus, BufWriter::new(file)).map_err(io_err)
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut corpus = Corpus::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        match parsed {
            Line::Researcher(r) => corpus.researchers.push(r),
            Line::Publication(p) => corpus.publications.push(p),
            Line::Profile(p) => corpus.profiles.push(p),
        }
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Author;
    use chrono::{TimeZone, Utc};
    use proptest::prelude::*;

    fn fixture() -> Corpus {
        let mut r = Researcher::new("r1", "Ada Lovelace", "Riverside School of Medicine");
        r.human_profile = Some("I study analytical engines.".into());
        Corpus {
            researchers: vec![r],
            publications: vec![PublicationEntry {
                researcher_id: "r1".into(),
                record: PublicationRecord {
                    pmid: "123".into(),
                    title: "Engines".into(),
                    abstract_text: "We describe an engine.".into(),
                    mesh_terms: vec!["Computers".into()],
                    authors: vec![Author::new("Lovelace", "Ada")],
                    year: Some(2020),
                    notes: vec![],
                },
            }],
            profiles: vec![ProfileDoc {
                researcher_id: "r1".into(),
                variant: Variant::MeshGen,
                text: "A profile.".into(),
                created_at: Utc.with_ymd_and_hms(2024, 1, 2, 3, 4, 5).unwrap(),
            }],
        }
    }

    #[test]
    fn empty_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        save_corpus(&Corpus::default(), &path).unwrap();
        assert_eq!(load_corpus(&path).unwrap(), Corpus::default());
    }

    #[test]
    fn fixture_reserializes_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        save_corpus(&fixture(), &a).unwrap();
        save_corpus(&load_corpus(&a).unwrap(), &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let text = std::fs::read_to_string(&a).unwrap();
        assert!(text.lines().next().unwrap().starts_with(r#"{"kind":"researcher","id":"r1""#));
        assert!(text.contains(r#""kind":"publication","researcher_id":"r1","pmid":"123""#));
    }

    #[test]
    fn corrupted_line_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let mut buf = Vec::new();
        write_corpus(&fixture(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[1] = r#"{"kind":"publication","pmid":"#;
        std::fs::write(&path, lines.join("\n")).unwrap();
        match load_corpus(&path) {
            Err(CorpusError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed-line error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_profile_pair_is_invalid() {
        let mut c = fixture();
        c.profiles.push(c.profiles[0].clone());
        assert!(c.validate().is_err());
        let mut c = fixture();
        let mut p = c.profiles[0].clone();
        p.text = "replacement".into();
        c.upsert_profile(p);
        assert_eq!(c.profiles.len(), 1);
        assert_eq!(c.profiles[0].text, "replacement");
    }

    fn arb_text() -> impl Strategy<Value = String> {
        "[a-zA-Z0-9 .,\"\\\\é\n]{1,24}"
    }

    prop_compose! {
        fn arb_corpus()(
            names in proptest::collection::vec(arb_text(), 0..4),
            pubs in proptest::collection::vec((1u32..99999, arb_text(), proptest::option::of(1990i32..2030)), 0..5),
            texts in proptest::collection::vec(arb_text(), 0..4),
            secs in 0i64..2_000_000_000,
        ) -> Corpus {
            let researchers = names.iter().enumerate()
                .map(|(i, n)| Researcher::new(format!("r{i}"), n.clone(), "Aff"))
                .collect();
            let publications = pubs.into_iter().map(|(pmid, title, year)| PublicationEntry {
                researcher_id: "r0".into(),
                record: PublicationRecord {
                    pmid: pmid.to_string(),
                    title: title.clone(),
                    abstract_text: title,
                    mesh_terms: vec!["Humans".into()],
                    authors: vec![Author::new("Doe", "J")],
                    year,
                    notes: vec![],
                },
            }).collect();
            let profiles = texts.into_iter().enumerate().map(|(i, text)| ProfileDoc {
                researcher_id: format!("r{i}"),
                variant: Variant::ALL[i % 4],
                text,
                created_at: Utc.timestamp_opt(secs, 0).unwrap(),
            }).collect();
            Corpus { researchers, publications, profiles }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn persistence_round_trip(corpus in arb_corpus()) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("p.jsonl");
            save_corpus(&corpus, &path).unwrap();
            prop_assert_eq!(load_corpus(&path).unwrap(), corpus);
        }
    }
}
