use std::collections::BTreeSet;
use std::path::Path;

use super::TokenizedDoc;

const DEFAULT_STOPLIST: &str = include_str!("../../data/stopwords_en.txt");

/// A set of lowercase words removed before TF-IDF and topic modelling.
pub type Stoplist = BTreeSet<String>;

/// Parses the stoplist format: one word per line, `#` starts a comment.
pub fn parse_stoplist(text: &str) -> Stoplist {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn default_stoplist() -> Stoplist {
    parse_stoplist(DEFAULT_STOPLIST)
}

pub fn load_stoplist(path: &Path) -> std::io::Result<Stoplist> {
    Ok(parse_stoplist(&std::fs::read_to_string(path)?))
}

pub fn remove_stopwords(doc: &TokenizedDoc, stoplist: &Stoplist) -> TokenizedDoc {
    TokenizedDoc {
        tokens: doc
            .tokens
            .iter()
            .filter(|t| !stoplist.contains(t.as_str()))
            .cloned()
            .collect(),
        source_variant: doc.source_variant,
    }
}
