//! Per-item polarity, side exclusivity and popularity.

use std::collections::{BTreeMap, BTreeSet};

use crate::dataset::ShareTable;
use crate::error::{Error, Result};
use crate::graph::{ItemId, UserId};
use crate::partition::{Side, SideAssignment};
use crate::polarimeter::PolarizationProfile;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct ItemScore<T> {
    pub item: ItemId,
    /// Mean polarization of the scored sharers.
    pub rho: T,
    /// Every user who shared the item, scored or not.
    pub sharers: BTreeSet<UserId>,
    pub n_x: u64,
    pub n_y: u64,
    pub exclusivity_x: T,
    pub exclusivity_y: T,
    pub popularity: u64,
}

impl<T: Scalar> ItemScore<T> {
    pub fn exclusivity(&self, side: Side) -> T {
        match side {
            Side::X => self.exclusivity_x,
            Side::Y => self.exclusivity_y,
        }
    }
}

/// Mean `rho` over the sharers that carry a score; `None` when none do, which
/// removes the item from every candidate pool.
pub fn item_polarization<'a, T: Scalar>(
    sharers: impl IntoIterator<Item = &'a UserId>,
    profile: &PolarizationProfile<T>,
) -> Option<T> {
    let (sum, count) = sharers
        .into_iter()
        .filter_map(|u| profile.rho(u.as_str()))
        .fold((T::zero(), 0usize), |(s, c), r| (s + r, c + 1));
    (count > 0).then(|| sum / T::of_usize(count))
}

/// Add-one smoothed share ratios `((n_x+1)/(n_y+1), (n_y+1)/(n_x+1))`.
pub fn exclusivity_scores<T: Scalar>(n_x: u64, n_y: u64) -> (T, T) {
    let x = T::from_u64(n_x + 1).unwrap_or_else(T::infinity);
    let y = T::from_u64(n_y + 1).unwrap_or_else(T::infinity);
    (x / y, y / x)
}

/// Largest retweet count among the tweets carrying the item.
pub fn popularity_score(item: &str, shares: &ShareTable) -> Result<u64> {
    shares
        .records_for_item(item)
        .map(|r| r.retweet_count)
        .max()
        .ok_or_else(|| Error::UnknownItem(item.to_owned()))
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ItemTable<T> {
    pub scores: BTreeMap<ItemId, ItemScore<T>>,
    /// Items none of whose sharers were scored.
    pub excluded: BTreeSet<ItemId>,
}

impl<T: Scalar> ItemTable<T> {
    pub fn get(&self, item: &str) -> Option<&ItemScore<T>> {
        self.scores.get(item)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ItemScore<T>> {
        self.scores.values()
    }
}

pub fn compute_item_scores<T: Scalar>(
    shares: &ShareTable,
    profile: &PolarizationProfile<T>,
    sides: &SideAssignment,
) -> ItemTable<T> {
    let mut table = ItemTable {
        scores: BTreeMap::new(),
        excluded: BTreeSet::new(),
    };
    for item in shares.items() {
        let sharers = shares.sharers(item.as_str());
        let Some(rho) = item_polarization(&sharers, profile) else {
            table.excluded.insert(item.clone());
            continue;
        };
        let (mut n_x, mut n_y) = (0, 0);
        for u in sharers.iter().filter(|u| profile.contains(u.as_str())) {
            match sides.side_of(u.as_str()) {
                Some(Side::X) => n_x += 1,
                Some(Side::Y) => n_y += 1,
                None => {}
            }
        }
        let (exclusivity_x, exclusivity_y) = exclusivity_scores(n_x, n_y);
        let popularity = popularity_score(item.as_str(), shares).unwrap_or(0);
        table.scores.insert(
            item.clone(),
            ItemScore {
                item: item.clone(),
                rho,
                sharers,
                n_x,
                n_y,
                exclusivity_x,
                exclusivity_y,
                popularity,
            },
        );
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ShareRecord;

    fn profile(rhos: &[(&str, f64)]) -> PolarizationProfile<f64> {
        // rho_y = 0 so rho = rho_x; negative values are fine for arithmetic tests
        PolarizationProfile::from_parts(
            rhos.iter().map(|p| UserId::from(p.0)).collect(),
            rhos.iter().map(|p| p.1).collect(),
            vec![0.0; rhos.len()],
        )
        .unwrap()
    }

    fn ids(xs: &[&str]) -> Vec<UserId> {
        xs.iter().map(|&s| UserId::from(s)).collect()
    }

    #[test]
    fn item_rho_is_mean_of_scored_sharers() {
        let p = profile(&[("a", 0.8), ("b", -0.2), ("c", -0.6)]);
        assert!((item_polarization(&ids(&["a", "b"]), &p).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(item_polarization(&ids(&["c"]), &p), Some(-0.6));
        assert_eq!(item_polarization(&ids(&["c", "zz"]), &p), Some(-0.6));
        assert_eq!(item_polarization(&ids(&["zz"]), &p), None);
    }

    #[test]
    fn smoothed_exclusivity() {
        assert_eq!(exclusivity_scores::<f64>(9, 0).0, 10.0);
        assert_eq!(exclusivity_scores::<f64>(4, 4), (1.0, 1.0));
        assert_eq!(exclusivity_scores::<f64>(3, 7).1, 2.0);
    }

    fn record(user: &str, item: &str, rt: u64) -> ShareRecord {
        ShareRecord {
            user: user.into(),
            item: item.into(),
            tweet_id: format!("{user}-{item}-{rt}"),
            retweet_count: rt,
            timestamp: 0,
        }
    }

    #[test]
    fn popularity_is_max_retweets() {
        let t = ShareTable::from_records([record("a", "i", 5), record("b", "i", 12), record("c", "i", 3)]);
        assert_eq!(popularity_score("i", &t).unwrap(), 12);
        let t = ShareTable::from_records([record("a", "i", 0)]);
        assert_eq!(popularity_score("i", &t).unwrap(), 0);
        let t = ShareTable::from_records([record("a", "i", 7), record("b", "i", 7)]);
        assert_eq!(popularity_score("i", &t).unwrap(), 7);
        assert!(matches!(popularity_score("nope", &t), Err(Error::UnknownItem(_))));
    }

    #[test]
    fn table_counts_sides_and_excludes_unscored_items() {
        let p = profile(&[("a", -0.5), ("b", -0.3), ("c", 0.4)]);
        let sides =
            SideAssignment::from_pairs([("a".into(), Side::X), ("b".into(), Side::X), ("c".into(), Side::Y)]).unwrap();
        let t = ShareTable::from_records([
            record("a", "i", 1),
            record("b", "i", 4),
            record("c", "i", 2),
            record("outsider", "i", 9),
            record("outsider", "j", 1),
        ]);
        let table = compute_item_scores(&t, &p, &sides);
        let i = table.get("i").unwrap();
        assert_eq!((i.n_x, i.n_y), (2, 1));
        assert_eq!(i.sharers.len(), 4);
        assert_eq!(i.popularity, 9);
        assert!((i.exclusivity_x - 1.5).abs() < 1e-12);
        assert!(table.excluded.contains("j"));
        assert!(table.get("j").is_none());
    }
}
