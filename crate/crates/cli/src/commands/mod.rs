pub mod evaluate;
pub mod generate;
pub mod humaneval;
pub mod import;
pub mod ingest;
pub mod report;
pub mod topics;
