use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Variant;

use super::{paired_t_test, PairedTestResult, StatsError};

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lexical,
    Divergence,
    Semantic,
    Syntactic,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Lexical, Family::Divergence, Family::Semantic, Family::Syntactic];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Lexical => "lexical",
            Self::Divergence => "divergence",
            Self::Semantic => "semantic",
            Self::Syntactic => "syntactic",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|f| f.as_str() == s.trim()).ok_or_else(|| format!("unknown metric family '{s}'"))
    }
}

/// One metric value. `reference` is set for pairwise metrics (the variant
/// compared against) and empty for metrics of a single text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub family: Family,
    pub metric: String,
    pub researcher_id: String,
    pub variant: Variant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Variant>,
    pub value: f64,
}

impl MetricValue {
    pub fn variant_pair(&self) -> String {
        match self.reference {
            Some(r) => format!("{}_vs_{}", self.variant, r),
            None => self.variant.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub family: Family,
    pub metric: String,
    pub variant_pair: String,
    pub n: usize,
    pub mean: f64,
    /// Sample variance; absent for a single value.
    pub variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub family: Family,
    pub metric: String,
    pub a: String,
    pub b: String,
    #[serde(flatten)]
    pub outcome: TestOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TestOutcome {
    Result(PairedTestResult),
    Skipped { skipped: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub version: u32,
    pub values: Vec<MetricValue>,
    pub aggregates: Vec<Aggregate>,
    pub tests: Vec<TestEntry>,
    /// Additional sections such as human-evaluation agreement.
    #[serde(default)]
    pub sections: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub notes: Vec<String>,
}

fn sort_key(v: &MetricValue) -> (Family, String, Variant, Option<Variant>, String) {
    (v.family, v.metric.clone(), v.variant, v.reference, v.researcher_id.clone())
}

/// Sorts values, checks one value per (metric, pair, researcher), computes
/// per-pair aggregates and paired tests between every two pairs of a metric
/// that share at least two researchers.
pub fn build_report(mut values: Vec<MetricValue>) -> Result<MetricReport, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyReport);
    }
    if let Some(v) = values.iter().find(|v| !v.value.is_finite()) {
        return Err(StatsError::NonFinite(format!("{} {} {}", v.metric, v.variant_pair(), v.researcher_id)));
    }
    values.sort_by_key(sort_key);
    for w in values.windows(2) {
        if sort_key(&w[0]) == sort_key(&w[1]) {
            return Err(StatsError::Duplicate(format!("{} {} {}", w[0].metric, w[0].variant_pair(), w[0].researcher_id)));
        }
    }

    type Series = BTreeMap<String, BTreeMap<String, f64>>;
    let mut grouped: BTreeMap<(Family, String), Series> = BTreeMap::new();
    for v in &values {
        grouped
            .entry((v.family, v.metric.clone()))
            .or_default()
            .entry(v.variant_pair())
            .or_default()
            .insert(v.researcher_id.clone(), v.value);
    }

    let mut aggregates = Vec::new();
    let mut tests = Vec::new();
    for ((family, metric), series) in &grouped {
        for (pair, by_researcher) in series {
            let xs: Vec<f64> = by_researcher.values().copied().collect();
            let n = xs.len();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let variance = (n > 1).then(|| xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0));
            aggregates.push(Aggregate { family: *family, metric: metric.clone(), variant_pair: pair.clone(), n, mean, variance });
        }
        let pairs: Vec<&String> = series.keys().collect();
        for (i, a) in pairs.iter().enumerate() {
            for b in &pairs[i + 1..] {
                let (sa, sb) = (&series[*a], &series[*b]);
                let shared: BTreeSet<&String> = sa.keys().filter(|k| sb.contains_key(*k)).collect();
                let xa: Vec<f64> = shared.iter().map(|k| sa[*k]).collect();
                let xb: Vec<f64> = shared.iter().map(|k| sb[*k]).collect();
                let outcome = match paired_t_test(&xa, &xb) {
                    Ok(r) => TestOutcome::Result(r),
                    Err(e) => TestOutcome::Skipped { skipped: e.to_string() },
                };
                tests.push(TestEntry { family: *family, metric: metric.clone(), a: (*a).clone(), b: (*b).clone(), outcome });
            }
        }
    }
    Ok(MetricReport { version: REPORT_VERSION, values, aggregates, tests, sections: BTreeMap::new(), notes: Vec::new() })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> StatsError + '_ {
    move |source| StatsError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> StatsError + '_ {
    move |e| StatsError::Io { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) }
}

impl MetricReport {
    pub fn families(&self) -> BTreeSet<Family> {
        self.values.iter().map(|v| v.family).collect()
    }

    /// Writes `report.json`, `metrics_<family>.csv` for each family present
    /// and `metrics_long.csv`. Returns the written paths.
    pub fn emit(&self, dir: &Path) -> Result<Vec<PathBuf>, StatsError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let mut written = Vec::new();

        let path = dir.join("report.json");
        let mut json = serde_json::to_string_pretty(self).map_err(|e| StatsError::NonFinite(e.to_string()))?;
        json.push('\n');
        std::fs::write(&path, json).map_err(io_err(&path))?;
        written.push(path);

        for family in self.families() {
            let path = dir.join(format!("metrics_{family}.csv"));
            let rows: Vec<&MetricValue> = self.values.iter().filter(|v| v.family == family).collect();
            let metrics: BTreeSet<&str> = rows.iter().map(|v| v.metric.as_str()).collect();
            let mut table: BTreeMap<(String, String), BTreeMap<&str, f64>> = BTreeMap::new();
            for v in &rows {
                table.entry((v.researcher_id.clone(), v.variant_pair())).or_default().insert(v.metric.as_str(), v.value);
            }
            let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
            let mut header = vec!["researcher_id", "variant_pair"];
            header.extend(metrics.iter());
            w.write_record(&header).map_err(csv_err(&path))?;
            for ((rid, pair), vals) in &table {
                let mut rec = vec![rid.clone(), pair.clone()];
                rec.extend(metrics.iter().map(|m| vals.get(m).map(f64::to_string).unwrap_or_default()));
                w.write_record(&rec).map_err(csv_err(&path))?;
            }
            w.flush().map_err(io_err(&path))?;
            written.push(path);
        }

        let path = dir.join("metrics_long.csv");
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        w.write_record(["metric", "variant", "researcher_id", "value"]).map_err(csv_err(&path))?;
        for v in &self.values {
            w.write_record([format!("{}.{}", v.family, v.metric), v.variant_pair(), v.researcher_id.clone(), v.value.to_string()])
                .map_err(csv_err(&path))?;
        }
        w.flush().map_err(io_err(&path))?;
        written.push(path);
        Ok(written)
    }

    pub fn read_json(path: &Path) -> Result<Self, StatsError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|e| StatsError::Io { path: path.to_path_buf(), source: std::io::Error::other(e.to_string()) })
    }
}
