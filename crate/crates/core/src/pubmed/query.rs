use serde::{Deserialize, Serialize};

use super::PubmedError;

/// An author search against PubMed, restricted to a publication-date range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchQuery {
    pub author_name: String,
    pub affiliation: Option<String>,
    pub date_from: i32,
    pub date_to: i32,
}

impl SearchQuery {
    pub fn new(author_name: impl Into<String>, affiliation: Option<String>, date_from: i32, date_to: i32) -> Result<Self, PubmedError> {
        let q = Self {
            author_name: author_name.into(),
            affiliation,
            date_from,
            date_to,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<(), PubmedError> {
        if self.author_name.trim().is_empty() {
            return Err(PubmedError::InvalidQuery("author name is empty".into()));
        }
        if self.date_from > self.date_to {
            return Err(PubmedError::InvalidQuery(format!(
                "date_from {} is after date_to {}",
                self.date_from, self.date_to
            )));
        }
        Ok(())
    }

    /// The Entrez `term` value. Affiliation narrows common names.
    pub fn term(&self) -> String {
        let mut term = format!("{}[Author]", self.author_name.trim());
        if let Some(aff) = self.affiliation.as_deref().map(str::trim).filter(|a| !a.is_empty()) {
            term.push_str(&format!(" AND {aff}[Affiliation]"));
        }
        term
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FetchPolicy {
    pub max_requests_per_second: f64,
    /// Page size for esearch and id-batch size for efetch (at most 200).
    pub batch_size: usize,
    pub retries: u32,
}

impl FetchPolicy {
    pub const MAX_BATCH: usize = 200;

    /// NCBI's published limits: 3 requests/s, 10 with an API key.
    pub fn for_api_key(has_key: bool) -> Self {
        Self {
            max_requests_per_second: if has_key { 10.0 } else { 3.0 },
            batch_size: Self::MAX_BATCH,
            retries: 3,
        }
    }

    pub fn validate(&self) -> Result<(), PubmedError> {
        if !(self.max_requests_per_second.is_finite() && self.max_requests_per_second > 0.0) {
            return Err(PubmedError::InvalidQuery("max_requests_per_second must be positive".into()));
        }
        if self.batch_size == 0 || self.batch_size > Self::MAX_BATCH {
            return Err(PubmedError::InvalidQuery(format!(
                "batch_size must be in 1..={}",
                Self::MAX_BATCH
            )));
        }
        Ok(())
    }
}

impl Default for FetchPolicy {
    fn default() -> Self {
        Self::for_api_key(false)
    }
}
