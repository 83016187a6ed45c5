use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DivergenceError, TfIdfVector};

pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Smoothed probability mass over an explicit support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDistribution {
    pub probs: BTreeMap<String, f64>,
}

impl TermDistribution {
    pub fn support(&self) -> impl Iterator<Item = &String> {
        self.probs.keys()
    }
}

/// Adds `epsilon` to every weight over `support` and renormalises.
pub fn to_distribution(
    vec: &TfIdfVector,
    support: &BTreeSet<String>,
    epsilon: f64,
) -> Result<TermDistribution, DivergenceError> {
    if support.is_empty() {
        return Err(DivergenceError::EmptySupport);
    }
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(DivergenceError::InvalidEpsilon(epsilon));
    }
    let raw: Vec<f64> = support.iter().map(|t| vec.weight(t) + epsilon).collect();
    let total: f64 = raw.iter().sum();
    Ok(TermDistribution {
        probs: support.iter().cloned().zip(raw.into_iter().map(|m| m / total)).collect(),
    })
}

/// `sum p ln(p/q)` in nats. Both distributions must have the same support.
pub fn kl_divergence(p: &TermDistribution, q: &TermDistribution) -> Result<f64, DivergenceError> {
    if p.probs.len() != q.probs.len() || p.probs.keys().zip(q.probs.keys()).any(|(a, b)| a != b) {
        return Err(DivergenceError::SupportMismatch);
    }
    let d: f64 = p
        .probs
        .values()
        .zip(q.probs.values())
        .map(|(&pi, &qi)| if pi == 0.0 { 0.0 } else { pi * (pi / qi).ln() })
        .sum();
    Ok(d.max(0.0))
}

/// Which side of a (machine, human) pair plays P.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KlDirection {
    #[default]
    MachineToHuman,
    HumanToMachine,
}

impl FromStr for KlDirection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "machine-to-human" | "machine-human" => Ok(Self::MachineToHuman),
            "human-to-machine" | "human-machine" => Ok(Self::HumanToMachine),
            other => Err(format!("unknown KL direction '{other}' (machine-to-human | human-to-machine)")),
        }
    }
}

impl KlDirection {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MachineToHuman => "machine-to-human",
            Self::HumanToMachine => "human-to-machine",
        }
    }
}

/// KL between two vectors over the union of their terms.
pub fn kl_between(
    machine: &TfIdfVector,
    human: &TfIdfVector,
    direction: KlDirection,
    epsilon: f64,
) -> Result<f64, DivergenceError> {
    let support: BTreeSet<String> = machine.weights.keys().chain(human.weights.keys()).cloned().collect();
    let m = to_distribution(machine, &support, epsilon)?;
    let h = to_distribution(human, &support, epsilon)?;
    match direction {
        KlDirection::MachineToHuman => kl_divergence(&m, &h),
        KlDirection::HumanToMachine => kl_divergence(&h, &m),
    }
}
