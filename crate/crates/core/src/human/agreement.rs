use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::Variant;

use super::{Dimension, HumanEvalError, RatingRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub ac1: f64,
    pub pa: f64,
    pub pe: f64,
    pub n_items: usize,
    pub n_raters: usize,
    pub n_categories: usize,
}

/// Gwet's AC1 for nominal ratings. Each item lists the category index
/// chosen by each of its raters.
pub fn gwet_ac1(items: &[Vec<usize>], n_categories: usize) -> Result<AgreementResult, HumanEvalError> {
    if n_categories < 2 {
        return Err(HumanEvalError::Agreement(format!("need at least 2 categories, got {n_categories}")));
    }
    if items.is_empty() {
        return Err(HumanEvalError::Agreement("no items".into()));
    }
    let q = n_categories;
    let mut pa = 0.0;
    let mut pi = vec![0.0; q];
    for (i, item) in items.iter().enumerate() {
        if item.len() < 2 {
            return Err(HumanEvalError::Agreement(format!("item {i} has {} rating(s), need at least 2", item.len())));
        }
        let mut counts = vec![0usize; q];
        for &c in item {
            if c >= q {
                return Err(HumanEvalError::Agreement(format!("item {i}: category {c} outside 0..{q}")));
            }
            counts[c] += 1;
        }
        let r = item.len() as f64;
        pa += counts.iter().map(|&k| (k * k.saturating_sub(1)) as f64).sum::<f64>() / (r * (r - 1.0));
        for (k, &c) in counts.iter().enumerate() {
            pi[k] += c as f64 / r;
        }
    }
    let n = items.len() as f64;
    pa /= n;
    let pe = pi.iter().map(|p| p / n).map(|p| p * (1.0 - p)).sum::<f64>() / (q as f64 - 1.0);
    Ok(AgreementResult {
        ac1: (pa - pe) / (1.0 - pe),
        pa,
        pe,
        n_items: items.len(),
        n_raters: items.iter().map(Vec::len).max().unwrap_or(0),
        n_categories: q,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Low,
    Middle,
    High,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Low, Band::Middle, Band::High];

    /// Very poor and Poor are low, Fair is middle, Good and Excellent are high.
    pub fn of_category(category: u8) -> Self {
        match category {
            0 | 1 => Self::Low,
            2 => Self::Middle,
            _ => Self::High,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Middle => "middle",
            Self::High => "high",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Band {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL.into_iter().find(|b| b.as_str() == s).ok_or_else(|| format!("unknown band '{s}'"))
    }
}

/// How ratings are turned into AC1 items.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// One item per (faculty, variant) pair, the five labels as categories.
    #[default]
    FacultyVariant,
    /// The same items with labels collapsed to low, middle and high.
    BandCollapsed,
}

impl Pooling {
    pub fn describe(self) -> &'static str {
        match self {
            Self::FacultyVariant => "items = (faculty, variant) pairs; categories = 5 labels, nominal",
            Self::BandCollapsed => "items = (faculty, variant) pairs; categories = low/middle/high bands",
        }
    }
}

/// Ratings of one dimension grouped into items keyed by (variant, faculty).
pub fn rating_items(records: &[RatingRecord], dimension: Dimension, variants: &[Variant]) -> BTreeMap<(Variant, u32), Vec<u8>> {
    let mut items: BTreeMap<(Variant, u32), Vec<u8>> = BTreeMap::new();
    for r in records.iter().filter(|r| variants.contains(&r.variant)) {
        items.entry((r.variant, r.faculty_id)).or_default().push(r.category(dimension));
    }
    items
}

pub fn pooled_ac1(
    records: &[RatingRecord],
    dimension: Dimension,
    variants: &[Variant],
    pooling: Pooling,
) -> Result<AgreementResult, HumanEvalError> {
    let items = rating_items(records, dimension, variants);
    let (items, q): (Vec<Vec<usize>>, usize) = match pooling {
        Pooling::FacultyVariant => (items.into_values().map(|v| v.into_iter().map(usize::from).collect()).collect(), 5),
        Pooling::BandCollapsed => (
            items.into_values().map(|v| v.into_iter().map(|c| Band::of_category(c) as usize).collect()).collect(),
            3,
        ),
    };
    gwet_ac1(&items, q)
}

/// Band of an item: the band of the label chosen by a strict majority of
/// its raters, or middle when no label has a majority.
pub fn item_band(categories: &[u8]) -> Band {
    let mut counts = [0usize; 5];
    for &c in categories {
        counts[c as usize] += 1;
    }
    match (0..5).find(|&k| 2 * counts[k] > categories.len()) {
        Some(k) => Band::of_category(k as u8),
        None => Band::Middle,
    }
}

/// AC1 on the overall dimension over the items that fall in `band`.
pub fn stratified_ac1(records: &[RatingRecord], variants: &[Variant], band: Band) -> Result<AgreementResult, HumanEvalError> {
    let items: Vec<Vec<usize>> = rating_items(records, Dimension::Overall, variants)
        .into_values()
        .filter(|v| item_band(v) == band)
        .map(|v| v.into_iter().map(usize::from).collect())
        .collect();
    if items.is_empty() {
        return Err(HumanEvalError::EmptyBand(band));
    }
    gwet_ac1(&items, 5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_item_hand_case() {
        let r = gwet_ac1(&[vec![0, 0], vec![0, 1]], 2).unwrap();
        assert_eq!(r.pa, 0.5);
        assert_eq!(r.pe, 0.375);
        assert!((r.ac1 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn unanimous_is_one() {
        let r = gwet_ac1(&[vec![2, 2, 2], vec![4, 4, 4], vec![0, 0, 0]], 5).unwrap();
        assert_eq!((r.pa, r.ac1), (1.0, 1.0));
    }

    #[test]
    fn input_errors() {
        assert!(gwet_ac1(&[vec![0]], 2).is_err());
        assert!(gwet_ac1(&[vec![0, 0]], 1).is_err());
        assert!(gwet_ac1(&[], 2).is_err());
        assert!(gwet_ac1(&[vec![0, 3]], 2).is_err());
    }

    #[test]
    fn band_rule() {
        assert_eq!(item_band(&[3, 3, 1]), Band::High);
        assert_eq!(item_band(&[4, 3, 3]), Band::High);
        assert_eq!(item_band(&[4, 3, 2]), Band::Middle);
        assert_eq!(item_band(&[0, 0, 4]), Band::Low);
        assert_eq!(item_band(&[2, 2, 0]), Band::Middle);
    }

    proptest! {
        #[test]
        fn bounded_and_relabel_invariant(
            items in prop::collection::vec(prop::collection::vec(0usize..4, 2..5), 1..12),
            perm in Just(vec![0usize, 1, 2, 3]).prop_shuffle(),
        ) {
            let r = gwet_ac1(&items, 4).unwrap();
            prop_assert!((0.0..=1.0).contains(&r.pa) && (0.0..=1.0).contains(&r.pe));
            prop_assert!((r.ac1 - (r.pa - r.pe) / (1.0 - r.pe)).abs() < 1e-15);
            let relabeled: Vec<Vec<usize>> = items.iter().map(|i| i.iter().map(|&c| perm[c]).collect()).collect();
            let s = gwet_ac1(&relabeled, 4).unwrap();
            prop_assert!((r.ac1 - s.ac1).abs() < 1e-12);
        }

        #[test]
        fn duplicating_unanimous_item_never_lowers(
            items in prop::collection::vec(prop::collection::vec(0usize..3, 3), 1..10),
            cat in 0usize..3,
        ) {
            let mut with = items.clone();
            with.push(vec![cat; 3]);
            let base = gwet_ac1(&with, 3).unwrap();
            with.push(vec![cat; 3]);
            let more = gwet_ac1(&with, 3).unwrap();
            prop_assert!(more.ac1 >= base.ac1 - 1e-12);
        }
    }
}
