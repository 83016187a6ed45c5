use serde::{Deserialize, Serialize};

use super::filter::{filter_by_authorship, filter_by_recency, AuthorshipRule, NameMatch, PersonName};
use super::{EutilsClient, PubmedError, SearchQuery};
use crate::corpus::{PublicationRecord, Researcher};

/// Filters applied to one researcher's search results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestOptions {
    pub authorship_rule: AuthorshipRule,
    pub name_match: NameMatch,
    pub recency_years: u32,
    pub reference_year: i32,
}

impl IngestOptions {
    pub fn new(reference_year: i32) -> Self {
        Self {
            authorship_rule: AuthorshipRule::default(),
            name_match: NameMatch::default(),
            recency_years: 10,
            reference_year,
        }
    }

    /// Author search restricted to the recency window.
    pub fn query_for(&self, researcher: &Researcher) -> Result<SearchQuery, PubmedError> {
        if self.recency_years == 0 {
            return Err(PubmedError::InvalidQuery("recency window must be at least 1 year".into()));
        }
        let affiliation = Some(researcher.affiliation.clone()).filter(|a| !a.trim().is_empty());
        SearchQuery::new(
            PersonName::parse(&researcher.name).search_form(),
            affiliation,
            self.reference_year - self.recency_years as i32 + 1,
            self.reference_year,
        )
    }
}

/// Counts from each step of one researcher's ingest.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub researcher_id: String,
    pub searched: usize,
    pub fetched: usize,
    pub missing: Vec<String>,
    pub after_authorship: usize,
    pub unparseable_year: usize,
    pub kept: usize,
}

/// Search, fetch, then apply the authorship and recency filters.
pub fn ingest_researcher(
    client: &EutilsClient,
    researcher: &Researcher,
    options: &IngestOptions,
) -> Result<(Vec<PublicationRecord>, IngestReport), PubmedError> {
    let query = options.query_for(researcher)?;
    let pmids = client.search_pmids(&query)?;
    let fetched = if pmids.is_empty() { Default::default() } else { client.fetch_records(&pmids)? };
    let mut records = fetched.records;
    for r in &mut records {
        r.dedup_mesh_terms();
    }
    let authored = filter_by_authorship(&records, researcher, options.authorship_rule, options.name_match);
    let recent = filter_by_recency(&authored, options.recency_years, options.reference_year);
    let report = IngestReport {
        researcher_id: researcher.id.clone(),
        searched: pmids.len(),
        fetched: records.len(),
        missing: fetched.missing,
        after_authorship: authored.len(),
        unparseable_year: recent.unparseable_year,
        kept: recent.kept.len(),
    };
    Ok((recent.kept, report))
}
