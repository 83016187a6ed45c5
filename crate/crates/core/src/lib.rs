//! Researcher interest profiling from PubMed metadata, plus the evaluation
//! battery used to compare generated profiles against self-written ones.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`corpus`]: domain types, tokenization, stoplist, stemming, JSON Lines store.
//! * [`pubmed`]: E-utilities search/fetch, XML parsing, authorship and recency filters.
//! * [`topics`]: collapsed-Gibbs LDA, dominant topics, diversity scores, heatmaps.
//! * [`generate`]: prompt plans (MeSH-based, divide-and-conquer, paraphrase) and LLM providers.
//! * [`lexical`], [`divergence`], [`semantic`], [`syntactic`]: automatic metrics.
//! * [`human`]: Likert rating tables and Gwet's AC1.
//! * [`stats`]: paired t-tests, significance stars, report emission.

pub mod corpus;
pub mod divergence;
pub mod generate;
pub mod http;
mod xml;
pub mod human;
pub mod lexical;
pub mod pubmed;
pub mod semantic;
pub mod stats;
pub mod syntactic;
pub mod topics;

pub use xml::XmlError;
pub use corpus::{Corpus, ProfileDoc, PublicationRecord, Researcher, TokenizedDoc, Variant};
