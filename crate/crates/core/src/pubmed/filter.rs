//! Authorship-position and recency filters.

use serde::{Deserialize, Serialize};

use crate::corpus::{Author, PublicationRecord, Researcher};

pub const DUPLICATE_AUTHOR_NOTE: &str = "duplicate-author-match";

/// Which author positions count as a substantial contribution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuthorshipRule {
    /// Among the first three or the last three authors.
    #[default]
    FirstThreeOrLastThree,
    /// Among the first three authors, or the last (senior) author.
    FirstThreeOrSenior,
}

impl AuthorshipRule {
    pub fn admits(self, index: usize, n_authors: usize) -> bool {
        match self {
            AuthorshipRule::FirstThreeOrLastThree => index < 3 || index + 3 >= n_authors,
            AuthorshipRule::FirstThreeOrSenior => index < 3 || index + 1 == n_authors,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NameMatch {
    /// Last name plus first initial, case-insensitive.
    #[default]
    Initial,
    /// Last name plus the complete fore name.
    FullForeName,
}

/// A researcher's display name split into (last, fore) parts. Accepts both
/// `"Last, Fore Middle"` and `"Fore Middle Last"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonName {
    pub last: String,
    pub fore: String,
}

impl PersonName {
    pub fn parse(display: &str) -> Self {
        if let Some((last, fore)) = display.split_once(',') {
            return Self {
                last: last.trim().to_string(),
                fore: fore.trim().to_string(),
            };
        }
        let parts: Vec<&str> = display.split_whitespace().collect();
        match parts.split_last() {
            Some((last, fore)) => Self {
                last: last.to_string(),
                fore: fore.join(" "),
            },
            None => Self {
                last: String::new(),
                fore: String::new(),
            },
        }
    }

    /// The `"Last F"` form PubMed's `[Author]` field expects.
    pub fn search_form(&self) -> String {
        match self.fore.chars().next() {
            Some(c) => format!("{} {}", self.last, c.to_uppercase()),
            None => self.last.clone(),
        }
    }
}

fn norm(s: &str) -> String {
    s.chars()
        .filter(|c| !matches!(c, '.' | ','))
        .collect::<String>()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn author_matches(author: &Author, name: &PersonName, mode: NameMatch) -> bool {
    if norm(&author.last_name) != norm(&name.last) {
        return false;
    }
    let (a, r) = (norm(&author.fore_name), norm(&name.fore));
    match mode {
        NameMatch::Initial => match (a.chars().next(), r.chars().next()) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        },
        NameMatch::FullForeName => !a.is_empty() && a == r,
    }
}

/// Position of the researcher in the author list (first occurrence) and
/// whether they appeared more than once.
pub fn author_position(record: &PublicationRecord, name: &PersonName, mode: NameMatch) -> Option<(usize, bool)> {
    let mut hits = record
        .authors
        .iter()
        .enumerate()
        .filter(|(_, a)| author_matches(a, name, mode))
        .map(|(i, _)| i);
    let first = hits.next()?;
    Some((first, hits.next().is_some()))
}

/// Keeps records where the researcher holds an admitted author position.
/// Records where the name matches more than once use the first match and
/// carry a `duplicate-author-match` note.
pub fn filter_by_authorship(
    records: &[PublicationRecord],
    researcher: &Researcher,
    rule: AuthorshipRule,
    mode: NameMatch,
) -> Vec<PublicationRecord> {
    let name = PersonName::parse(&researcher.name);
    records
        .iter()
        .filter_map(|r| {
            let (idx, dup) = author_position(r, &name, mode)?;
            if !rule.admits(idx, r.authors.len()) {
                return None;
            }
            let mut r = r.clone();
            if dup && !r.notes.iter().any(|n| n == DUPLICATE_AUTHOR_NOTE) {
                r.notes.push(DUPLICATE_AUTHOR_NOTE.to_string());
            }
            Some(r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecencyOutcome {
    pub kept: Vec<PublicationRecord>,
    /// Records dropped because no year could be determined.
    pub unparseable_year: usize,
}

/// Keeps records with `reference_year - year < window_years`.
pub fn filter_by_recency(records: &[PublicationRecord], window_years: u32, reference_year: i32) -> RecencyOutcome {
    assert!(window_years >= 1, "window_years must be at least 1");
    let mut unparseable_year = 0;
    let kept = records
        .iter()
        .filter(|r| match r.year {
            Some(y) => i64::from(reference_year) - i64::from(y) < i64::from(window_years),
            None => {
                unparseable_year += 1;
                false
            }
        })
        .cloned()
        .collect();
    RecencyOutcome { kept, unparseable_year }
}
