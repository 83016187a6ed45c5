//! PubMed E-utilities ingestion: search, fetch, parse, and filter.

mod client;
mod filter;
mod ingest;
mod parse;
mod query;
pub mod rate_limit;

pub use client::{EutilsClient, FetchOutcome, API_KEY_ENV, EUTILS_BASE};
pub use filter::{
    author_position, filter_by_authorship, filter_by_recency, AuthorshipRule, NameMatch, PersonName, RecencyOutcome,
    DUPLICATE_AUTHOR_NOTE,
};
pub use ingest::{ingest_researcher, IngestOptions, IngestReport};
pub use parse::{parse_efetch, parse_esearch, SearchPage};
pub use query::{FetchPolicy, SearchQuery};
pub use rate_limit::{Clock, RateLimiter, SystemClock, VirtualClock};

use crate::http::TransportError;
use crate::xml::XmlError;

#[derive(Debug, thiserror::Error)]
pub enum PubmedError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Xml(#[from] XmlError),
    #[error("malformed E-utilities response: {0}")]
    Envelope(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid PMID '{0}' (digits only)")]
    InvalidPmid(String),
}
