use std::collections::BTreeSet;
use std::io::Write;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::TopicError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub researcher_id: String,
    pub pmid: String,
    pub year: i32,
    pub dominant_topic: usize,
}

pub const STABLE_BELOW: f64 = 0.3;
pub const EVOLVING_ABOVE: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiversityBand {
    Stable,
    Intermediate,
    Evolving,
}

impl DiversityBand {
    pub fn classify(score: f64) -> Self {
        if score < STABLE_BELOW {
            Self::Stable
        } else if score > EVOLVING_ABOVE {
            Self::Evolving
        } else {
            Self::Intermediate
        }
    }
}

/// Unique dominant topics divided by publication count.
pub fn diversity_score(assignments: &[TopicAssignment]) -> Result<f64, TopicError> {
    if assignments.is_empty() {
        return Err(TopicError::EmptyInput("no topic assignments".into()));
    }
    let unique: BTreeSet<usize> = assignments.iter().map(|a| a.dominant_topic).collect();
    Ok(unique.len() as f64 / assignments.len() as f64)
}

/// Per-year dominant-topic proportions. Rows for years without publications are all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearHeatmap {
    pub years: Vec<i32>,
    pub rows: Vec<Vec<f64>>,
}

pub fn year_heatmap(
    assignments: &[TopicAssignment],
    years: RangeInclusive<i32>,
    num_topics: usize,
) -> Result<YearHeatmap, TopicError> {
    let years: Vec<i32> = years.collect();
    if years.is_empty() {
        return Err(TopicError::EmptyInput("empty year range".into()));
    }
    let mut counts = vec![vec![0usize; num_topics]; years.len()];
    for a in assignments {
        if a.dominant_topic >= num_topics {
            return Err(TopicError::InvalidParameter(format!("topic {} outside 0..{num_topics}", a.dominant_topic)));
        }
        if let Some(i) = years.iter().position(|&y| y == a.year) {
            counts[i][a.dominant_topic] += 1;
        }
    }
    let rows = counts
        .into_iter()
        .map(|row| {
            let n: usize = row.iter().sum();
            row.into_iter().map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 }).collect()
        })
        .collect();
    Ok(YearHeatmap { years, rows })
}

impl YearHeatmap {
    pub fn num_topics(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    /// Year-to-year topic movement: the outer products of consecutive
    /// non-empty year rows, summed and row-normalised.
    pub fn transitions(&self) -> Vec<Vec<f64>> {
        let k = self.num_topics();
        let mut m = vec![vec![0.0; k]; k];
        let active: Vec<&Vec<f64>> = self.rows.iter().filter(|r| r.iter().any(|&x| x > 0.0)).collect();
        for pair in active.windows(2) {
            for (i, &a) in pair[0].iter().enumerate() {
                for (j, &b) in pair[1].iter().enumerate() {
                    m[i][j] += a * b;
                }
            }
        }
        for row in &mut m {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|x| *x /= s);
            }
        }
        m
    }
}

fn topic_header(prefix: &[&str], k: usize) -> Vec<String> {
    prefix.iter().map(|s| s.to_string()).chain((0..k).map(|t| format!("topic_{t}"))).collect()
}

/// Writes `researcher_id,year,topic_0..topic_{K-1}` rows for every researcher.
pub fn write_heatmap_csv<W: Write>(w: W, maps: &[(String, YearHeatmap)], num_topics: usize) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(topic_header(&["researcher_id", "year"], num_topics))?;
    for (id, map) in maps {
        for (year, row) in map.years.iter().zip(&map.rows) {
            let mut rec = vec![id.clone(), year.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            out.write_record(rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Writes `researcher_id,from_topic,topic_0..topic_{K-1}` transition rows.
pub fn write_transitions_csv<W: Write>(w: W, maps: &[(String, YearHeatmap)], num_topics: usize) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(topic_header(&["researcher_id", "from_topic"], num_topics))?;
    for (id, map) in maps {
        for (from, row) in map.transitions().iter().enumerate() {
            let mut rec = vec![id.clone(), from.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            out.write_record(rec)?;
        }
    }
    out.flush()?;
    Ok(())
}
