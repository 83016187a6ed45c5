use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Variant;

use super::HumanEvalError;

pub const QUALITY_LABELS: [&str; 5] = ["Very poor", "Poor", "Fair", "Good", "Excellent"];
pub const GRANULARITY_LABELS: [&str; 5] = ["Too general", "General", "Good granularity", "Detailed", "Too detailed"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Overall,
    FactualAccuracy,
    Granularity,
    Readability,
    Comprehensiveness,
    Specificity,
    Conciseness,
}

impl Dimension {
    pub const ALL: [Dimension; 7] = [
        Self::Overall,
        Self::FactualAccuracy,
        Self::Granularity,
        Self::Readability,
        Self::Comprehensiveness,
        Self::Specificity,
        Self::Conciseness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Overall => "overall",
            Self::FactualAccuracy => "factual_accuracy",
            Self::Granularity => "granularity",
            Self::Readability => "readability",
            Self::Comprehensiveness => "comprehensiveness",
            Self::Specificity => "specificity",
            Self::Conciseness => "conciseness",
        }
    }

    pub fn labels(self) -> &'static [&'static str; 5] {
        if self == Self::Granularity { &GRANULARITY_LABELS } else { &QUALITY_LABELS }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|d| d.as_str() == s).ok_or_else(|| format!("unknown dimension '{s}'"))
    }
}

/// One rater's judgement of one profile. Categories are stored as indices
/// 0..5 into the dimension's label list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingRecord {
    pub faculty_id: u32,
    pub rater_index: u32,
    pub variant: Variant,
    pub categories: [u8; 7],
    pub identified_as_human: bool,
}

impl RatingRecord {
    pub fn category(&self, d: Dimension) -> u8 {
        self.categories[d as usize]
    }

    pub fn label(&self, d: Dimension) -> &'static str {
        d.labels()[self.category(d) as usize]
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    faculty: u32,
    rater: u32,
    variant: String,
    overall: String,
    factual_accuracy: String,
    granularity: String,
    readability: String,
    comprehensiveness: String,
    specificity: String,
    conciseness: String,
    identified_as_human: String,
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

pub fn read_ratings<R: Read>(r: R) -> Result<Vec<RatingRecord>, HumanEvalError> {
    let mut reader = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let bad = |message: String| HumanEvalError::Row { file: None, row: line, message };
        let row = row.map_err(|e| bad(e.to_string()))?;
        let variant: Variant = row.variant.parse().map_err(bad)?;
        let raw = [
            &row.overall,
            &row.factual_accuracy,
            &row.granularity,
            &row.readability,
            &row.comprehensiveness,
            &row.specificity,
            &row.conciseness,
        ];
        let mut categories = [0u8; 7];
        for (k, d) in Dimension::ALL.into_iter().enumerate() {
            let label = raw[k].trim();
            categories[k] = d
                .labels()
                .iter()
                .position(|l| l.eq_ignore_ascii_case(label))
                .ok_or_else(|| bad(format!("unknown {d} category '{label}'")))? as u8;
        }
        let identified_as_human = parse_bool(&row.identified_as_human)
            .ok_or_else(|| bad(format!("identified_as_human must be TRUE or FALSE, got '{}'", row.identified_as_human)))?;
        out.push(RatingRecord { faculty_id: row.faculty, rater_index: row.rater, variant, categories, identified_as_human });
    }
    Ok(out)
}

pub fn load_ratings(path: &Path) -> Result<Vec<RatingRecord>, HumanEvalError> {
    let f = std::fs::File::open(path).map_err(|source| HumanEvalError::Io { path: path.to_path_buf(), source })?;
    read_ratings(f).map_err(|e| e.in_file(path))
}

/// Loads every `*.csv` in a directory, in file-name order.
pub fn load_ratings_dir(dir: &Path) -> Result<Vec<RatingRecord>, HumanEvalError> {
    let io = |source| HumanEvalError::Io { path: dir.to_path_buf(), source };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let mut all = Vec::new();
    for p in paths {
        all.extend(load_ratings(&p)?);
    }
    Ok(all)
}

pub fn write_ratings<W: Write>(w: W, records: &[RatingRecord]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(Row {
            faculty: r.faculty_id,
            rater: r.rater_index,
            variant: r.variant.as_str().into(),
            overall: r.label(Dimension::Overall).into(),
            factual_accuracy: r.label(Dimension::FactualAccuracy).into(),
            granularity: r.label(Dimension::Granularity).into(),
            readability: r.label(Dimension::Readability).into(),
            comprehensiveness: r.label(Dimension::Comprehensiveness).into(),
            specificity: r.label(Dimension::Specificity).into(),
            conciseness: r.label(Dimension::Conciseness).into(),
            identified_as_human: if r.identified_as_human { "TRUE" } else { "FALSE" }.into(),
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Fraction of a variant's ratings in the favourable categories of each
/// dimension: Good or Excellent, and "Good granularity" for granularity.
pub fn summary_percentages(records: &[RatingRecord], variant: Variant) -> BTreeMap<Dimension, f64> {
    let rows: Vec<&RatingRecord> = records.iter().filter(|r| r.variant == variant).collect();
    Dimension::ALL
        .into_iter()
        .map(|d| {
            let good = rows.iter().filter(|r| is_favourable(d, r.category(d))).count();
            (d, if rows.is_empty() { 0.0 } else { good as f64 / rows.len() as f64 })
        })
        .collect()
}

pub fn is_favourable(d: Dimension, category: u8) -> bool {
    if d == Dimension::Granularity { category == 2 } else { category >= 3 }
}

/// (favourable, total) for one dimension of one variant.
pub fn favourable_count(records: &[RatingRecord], variant: Variant, d: Dimension) -> (usize, usize) {
    let rows: Vec<&RatingRecord> = records.iter().filter(|r| r.variant == variant).collect();
    (rows.iter().filter(|r| is_favourable(d, r.category(d))).count(), rows.len())
}

/// (identified as human, total) for one variant.
pub fn identified_as_human_count(records: &[RatingRecord], variant: Variant) -> (usize, usize) {
    let rows: Vec<&RatingRecord> = records.iter().filter(|r| r.variant == variant).collect();
    (rows.iter().filter(|r| r.identified_as_human).count(), rows.len())
}
