//! Factor lists, weighted rank aggregation and explained recommendations.

mod aggregate;
mod footrule;
mod lists;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ItemId;
use crate::scalar::Scalar;

pub use aggregate::{aggregate_rankings, Aggregate, AggregationConfig, AggregationMethod};
pub use footrule::footrule_distance;
pub use lists::{
    build_candidate_pool, build_factor_lists, random_baseline, recommend, FactorContribution, FactorLists,
    RecommendContext, Recommendation, RecommendedItem,
};

/// Factor scores closer than 1e-9 rank as ties, so rounding noise cannot
/// override the item-id tie-break.
pub(crate) fn tie_key<T: Scalar>(v: T) -> f64 {
    (v.as_f64() * 1e9).round()
}

/// The five recommendation factors, in list order L1..L5.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Factor {
    /// L1: decrease in the user's polarization from endorsing an opposite hub.
    #[serde(rename = "L1")]
    Polarization,
    /// L2: exclusivity of the item to the opposite side.
    #[serde(rename = "L2")]
    Exclusivity,
    /// L3: acceptance probability.
    #[serde(rename = "L3")]
    Acceptance,
    /// L4: topic diversity (ascending similarity).
    #[serde(rename = "L4")]
    Diversity,
    /// L5: popularity.
    #[serde(rename = "L5")]
    Popularity,
}

impl Factor {
    pub const ALL: [Factor; 5] = [
        Factor::Polarization,
        Factor::Exclusivity,
        Factor::Acceptance,
        Factor::Diversity,
        Factor::Popularity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        ["L1", "L2", "L3", "L4", "L5"][self.index()]
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// An ordered list of distinct items produced by one factor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedList {
    pub factor: Factor,
    items: Vec<ItemId>,
}

impl RankedList {
    pub fn new(factor: Factor, items: Vec<ItemId>) -> Self {
        debug_assert!(
            {
                let mut seen = std::collections::HashSet::new();
                items.iter().all(|i| seen.insert(i))
            },
            "ranked list has duplicates"
        );
        RankedList { factor, items }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// 1-based rank of the item, if listed.
    pub fn position(&self, item: &str) -> Option<usize> {
        self.items.iter().position(|i| i.as_str() == item).map(|p| p + 1)
    }

    pub fn top(&self, k: usize) -> &[ItemId] {
        &self.items[..k.min(self.items.len())]
    }
}

/// Importance weights for L1..L5, stored normalized to sum 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorWeights<T> {
    weights: [T; 5],
}

impl<T: Scalar> FactorWeights<T> {
    pub fn new(raw: [T; 5]) -> Result<Self> {
        if raw.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::InvalidParameter(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total: T = raw.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::InvalidParameter("at least one weight must be positive".into()));
        }
        Ok(FactorWeights {
            weights: raw.map(|w| w / total),
        })
    }

    pub fn uniform() -> Self {
        Self::new([T::one(); 5]).expect("uniform weights are valid")
    }

    /// Heavy on the polarization-reduction and exclusivity lists.
    pub fn contrarian() -> Self {
        Self::new([0.4, 0.4, 0.2, 0.0, 0.0].map(T::of)).expect("preset is valid")
    }

    /// Heavy on acceptance probability.
    pub fn agreeable() -> Self {
        Self::new([0.1, 0.1, 0.6, 0.1, 0.1].map(T::of)).expect("preset is valid")
    }

    pub fn get(&self, factor: Factor) -> T {
        self.weights[factor.index()]
    }

    pub fn as_array(&self) -> [T; 5] {
        self.weights
    }
}

impl<T: Scalar> Default for FactorWeights<T> {
    fn default() -> Self {
        Self::uniform()
    }
}

impl<T: Scalar> FromStr for FactorWeights<T> {
    type Err = Error;

    /// Accepts a preset name (`uniform`, `contrarian`, `agreeable`) or five
    /// comma-separated numbers.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => return Ok(Self::uniform()),
            "contrarian" => return Ok(Self::contrarian()),
            "agreeable" => return Ok(Self::agreeable()),
            _ => {}
        }
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidParameter(format!("cannot parse weights `{s}`")))?;
        let raw: [f64; 5] = parts
            .try_into()
            .map_err(|_| Error::InvalidParameter(format!("expected five weights, got `{s}`")))?;
        Self::new(raw.map(T::of))
    }
}
