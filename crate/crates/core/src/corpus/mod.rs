//! Core domain types shared by every pipeline stage.

mod stem;
mod stopwords;
mod store;
mod tokenize;

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use stem::stem;
pub use stopwords::{default_stoplist, load_stoplist, parse_stoplist, remove_stopwords, Stoplist};
pub use store::{load_corpus, save_corpus, write_corpus, Corpus, CorpusError, PublicationEntry};
pub use tokenize::{tokenize, tokenize_as, word_tokens};

/// A researcher whose interests are being profiled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Researcher {
    pub id: String,
    pub name: String,
    pub affiliation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub department: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub human_profile: Option<String>,
}

impl Researcher {
    pub fn new(id: impl Into<String>, name: impl Into<String>, affiliation: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            affiliation: affiliation.into(),
            department: None,
            human_profile: None,
        }
    }

    /// Checks the per-record invariants (non-empty id, non-blank profile).
    pub fn validate(&self) -> Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("researcher id is empty".into());
        }
        if let Some(p) = &self.human_profile {
            if p.trim().is_empty() {
                return Err(format!("researcher {}: human_profile is blank", self.id));
            }
        }
        Ok(())
    }
}

/// One author entry of a PubMed article, in list order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Author {
    pub last_name: String,
    pub fore_name: String,
}

impl Author {
    pub fn new(last_name: impl Into<String>, fore_name: impl Into<String>) -> Self {
        Self {
            last_name: last_name.into(),
            fore_name: fore_name.into(),
        }
    }
}

/// One PubMed article.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub pmid: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub mesh_terms: Vec<String>,
    pub authors: Vec<Author>,
    /// Publication year; `None` when neither `PubDate/Year` nor a
    /// `MedlineDate` prefix yielded one.
    pub year: Option<i32>,
    /// Processing notes, e.g. `duplicate-author-match`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl PublicationRecord {
    /// Title and abstract joined, the text used for topic modelling.
    pub fn text(&self) -> String {
        if self.abstract_text.is_empty() {
            self.title.clone()
        } else {
            format!("{} {}", self.title, self.abstract_text)
        }
    }

    /// Removes case-insensitive duplicates from `mesh_terms`, keeping the
    /// first spelling seen.
    pub fn dedup_mesh_terms(&mut self) {
        let mut seen = std::collections::HashSet::new();
        self.mesh_terms.retain(|t| seen.insert(t.to_lowercase()));
    }
}

/// Which kind of text a profile is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Human,
    MeshGen,
    AbstractGen,
    Paraphrase,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Human,
        Variant::MeshGen,
        Variant::AbstractGen,
        Variant::Paraphrase,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Human => "human",
            Variant::MeshGen => "mesh_gen",
            Variant::AbstractGen => "abstract_gen",
            Variant::Paraphrase => "paraphrase",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "human" | "self" => Ok(Variant::Human),
            "mesh_gen" | "mesh" => Ok(Variant::MeshGen),
            "abstract_gen" | "abstract" => Ok(Variant::AbstractGen),
            "paraphrase" => Ok(Variant::Paraphrase),
            other => Err(format!("unknown profile variant '{other}'")),
        }
    }
}

/// A profile text tagged with the variant that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub researcher_id: String,
    pub variant: Variant,
    pub text: String,
    pub created_at: DateTime<Utc>,
}

/// Lowercase word tokens of one text.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_variant: Option<Variant>,
}

impl TokenizedDoc {
    pub fn new(tokens: Vec<String>) -> Self {
        Self {
            tokens,
            source_variant: None,
        }
    }

    pub fn from_words<S: AsRef<str>>(words: &[S]) -> Self {
        Self::new(words.iter().map(|w| w.as_ref().to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// The same tokens passed through the Porter stemmer.
    pub fn stemmed(&self) -> TokenizedDoc {
        TokenizedDoc {
            tokens: self.tokens.iter().map(|t| stem(t)).collect(),
            source_variant: self.source_variant,
        }
    }
}
