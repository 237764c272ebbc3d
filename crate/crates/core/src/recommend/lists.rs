use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{aggregate_rankings, tie_key, AggregationConfig, Factor, FactorWeights, RankedList};
use crate::acceptance::AcceptanceModel;
use crate::dataset::ShareTable;
use crate::error::{Error, Result};
use crate::graph::{EndorsementGraph, HubSet, ItemId, UserId};
use crate::items::ItemTable;
use crate::partition::{Side, SideAssignment};
use crate::polarimeter::{delta_polarization, Polarization};
use crate::scalar::Scalar;
use crate::topics::{diversity_scores, TopicModel, TopicVector};

/// Everything the factor lists are computed from.
#[derive(Clone, Copy, Debug)]
pub struct RecommendContext<'a, T> {
    pub graph: &'a EndorsementGraph,
    pub sides: &'a SideAssignment,
    pub hubs_x: &'a HubSet,
    pub hubs_y: &'a HubSet,
    pub polarization: &'a Polarization<T>,
    pub items: &'a ItemTable<T>,
    pub acceptance: &'a AcceptanceModel<T>,
    pub topics: &'a TopicModel<T>,
    pub shares: &'a ShareTable,
}

/// Scored items the user has not shared yet.
pub fn build_candidate_pool<T: Scalar>(
    user: &str,
    shares: &ShareTable,
    items: &ItemTable<T>,
) -> Result<BTreeSet<ItemId>> {
    let pool: BTreeSet<ItemId> = items
        .scores
        .keys()
        .filter(|i| !shares.has_shared(user, i.as_str()))
        .cloned()
        .collect();
    if pool.is_empty() {
        return Err(Error::NothingToRecommend(user.to_owned()));
    }
    Ok(pool)
}

/// The five factor lists for one user, in L1..L5 order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorLists {
    pub user: UserId,
    pub lists: [RankedList; 5],
}

impl FactorLists {
    pub fn list(&self, factor: Factor) -> &RankedList {
        &self.lists[factor.index()]
    }

    /// L2 ranks the whole pool.
    pub fn pool(&self) -> &[ItemId] {
        self.list(Factor::Exclusivity).items()
    }
}

fn rank<T: Scalar>(mut scored: Vec<(ItemId, T)>, descending: bool) -> Vec<ItemId> {
    scored.sort_by(|a, b| {
        let ord = tie_key(a.1).total_cmp(&tie_key(b.1));
        let ord = if descending { ord.reverse() } else { ord };
        ord.then_with(|| a.0.cmp(&b.0))
    });
    scored.into_iter().map(|(i, _)| i).collect()
}

pub fn build_factor_lists<T: Scalar>(
    ctx: &RecommendContext<'_, T>,
    user: &str,
    pool: &BTreeSet<ItemId>,
) -> Result<FactorLists> {
    let profile = &ctx.polarization.profile;
    let rho_u = profile.rho(user).ok_or_else(|| Error::UnknownUser(user.to_owned()))?;
    let side = ctx
        .sides
        .side_of(user)
        .ok_or_else(|| Error::MissingAssignment(user.to_owned()))?;
    let opposite = side.opposite();
    let opposite_hubs = match opposite {
        Side::X => ctx.hubs_x,
        Side::Y => ctx.hubs_y,
    };
    let item = |id: &ItemId| {
        ctx.items
            .get(id.as_str())
            .ok_or_else(|| Error::UnknownItem(id.to_string()))
    };

    // hubs have zero hitting time to their own side; a one-row update says
    // nothing about them, so their L1 stays empty
    let is_hub = ctx.hubs_x.contains(user) || ctx.hubs_y.contains(user);
    let mut l1 = Vec::new();
    if !is_hub {
        for id in pool {
            let sharers = &item(id)?.sharers;
            if let Some(hub) = opposite_hubs.members.iter().find(|h| sharers.contains(*h)) {
                let delta = delta_polarization(ctx.graph, ctx.polarization, user, hub.as_str())?;
                l1.push((id.clone(), delta));
            }
        }
    }

    let mut l2 = Vec::with_capacity(pool.len());
    let mut l3 = Vec::with_capacity(pool.len());
    let mut l5 = Vec::with_capacity(pool.len());
    let mut topic_items = Vec::with_capacity(pool.len());
    for id in pool {
        let score = item(id)?;
        l2.push((id.clone(), score.exclusivity(opposite)));
        l3.push((id.clone(), ctx.acceptance.accept_prob(rho_u, score.rho)));
        l5.push((id.clone(), T::from_u64(score.popularity).unwrap_or_else(T::max_value)));
        topic_items.push((id.clone(), ctx.topics.item(id.as_str()).cloned().unwrap_or_default()));
    }
    let empty = TopicVector::new();
    let (l4, _) = diversity_scores(ctx.topics.user(user).unwrap_or(&empty), &topic_items);

    Ok(FactorLists {
        user: UserId::from(user),
        lists: [
            RankedList::new(Factor::Polarization, rank(l1, true)),
            RankedList::new(Factor::Exclusivity, rank(l2, true)),
            RankedList::new(Factor::Acceptance, rank(l3, true)),
            l4,
            RankedList::new(Factor::Popularity, rank(l5, true)),
        ],
    })
}

/// One factor's share in an item's placement.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorContribution<T> {
    pub factor: Factor,
    /// Normalized weight; the five sum to 1.
    pub weight: T,
    /// 1-based rank in the factor's full list.
    pub position: Option<usize>,
    /// `weight * |rank in output - rank in list top-k|`, absent items at k+1.
    pub contribution: T,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecommendedItem<T> {
    pub rank: usize,
    pub item: ItemId,
    pub breakdown: Vec<FactorContribution<T>>,
    /// Every user in the dataset who shared the item.
    pub sharers: Vec<UserId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Recommendation<T> {
    pub user: UserId,
    pub items: Vec<RecommendedItem<T>>,
    pub phi: T,
    pub weights: [T; 5],
    /// Fewer candidates than requested.
    pub short_pool: bool,
    pub exact: bool,
}

/// Aggregates cached factor lists into the top `n` with a per-factor
/// breakdown and the item's sharers.
pub fn recommend<T: Scalar>(
    lists: &FactorLists,
    weights: &FactorWeights<T>,
    n: usize,
    cfg: &AggregationConfig,
    shares: &ShareTable,
) -> Result<Recommendation<T>> {
    let pool_size = lists.pool().len();
    if pool_size == 0 {
        return Err(Error::NothingToRecommend(lists.user.to_string()));
    }
    let w = weights.as_array();
    let agg = aggregate_rankings(&lists.lists, &w, n, cfg)?;
    let k = agg.items.len();
    let items = agg
        .items
        .iter()
        .enumerate()
        .map(|(j, item)| {
            let breakdown = Factor::ALL
                .iter()
                .map(|&f| {
                    let list = lists.list(f);
                    let position = list.position(item.as_str());
                    let in_top = position.filter(|&p| p <= k).unwrap_or(k + 1);
                    FactorContribution {
                        factor: f,
                        weight: w[f.index()],
                        position,
                        contribution: w[f.index()] * T::of_usize((j + 1).abs_diff(in_top)),
                    }
                })
                .collect();
            RecommendedItem {
                rank: j + 1,
                item: item.clone(),
                breakdown,
                sharers: shares.sharers(item.as_str()).into_iter().collect(),
            }
        })
        .collect();
    Ok(Recommendation {
        user: lists.user.clone(),
        items,
        phi: agg.phi,
        weights: w,
        short_pool: pool_size < n,
        exact: agg.exact,
    })
}

/// Up to `n` items drawn uniformly without replacement from `pool` minus
/// `exclude`, reproducible per seed.
pub fn random_baseline<'a>(
    pool: impl IntoIterator<Item = &'a ItemId>,
    exclude: &BTreeSet<ItemId>,
    n: usize,
    seed: u64,
) -> Result<Vec<ItemId>> {
    let mut residual: Vec<&ItemId> = pool.into_iter().filter(|i| !exclude.contains(*i)).collect();
    residual.sort();
    residual.dedup();
    if residual.is_empty() {
        return Err(Error::Precondition("random baseline: empty residual pool".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, residual.len(), n.min(residual.len()));
    Ok(picks.into_iter().map(|i| residual[i].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ShareRecord;
    use crate::items::ItemScore;

    fn ids(xs: &[&str]) -> Vec<ItemId> {
        xs.iter().map(|&s| ItemId::from(s)).collect()
    }

    fn table(items: &[&str]) -> ItemTable<f64> {
        let mut t = ItemTable::default();
        for &i in items {
            t.scores.insert(
                i.into(),
                ItemScore {
                    item: i.into(),
                    rho: 0.0,
                    sharers: BTreeSet::new(),
                    n_x: 0,
                    n_y: 0,
                    exclusivity_x: 1.0,
                    exclusivity_y: 1.0,
                    popularity: 0,
                },
            );
        }
        t
    }

    fn share(user: &str, item: &str) -> ShareRecord {
        ShareRecord {
            user: user.into(),
            item: item.into(),
            tweet_id: String::new(),
            retweet_count: 0,
            timestamp: 0,
        }
    }

    #[test]
    fn pool_excludes_own_shares() {
        let items = table(&["a", "b", "c"]);
        let shares = ShareTable::from_records([share("u", "b")]);
        let pool = build_candidate_pool("u", &shares, &items).unwrap();
        assert_eq!(pool.into_iter().collect::<Vec<_>>(), ids(&["a", "c"]));
        let pool = build_candidate_pool("nobody", &shares, &items).unwrap();
        assert_eq!(pool.len(), 3);
    }

    #[test]
    fn pool_empty_when_everything_shared() {
        let items = table(&["a"]);
        let shares = ShareTable::from_records([share("u", "a")]);
        assert!(matches!(
            build_candidate_pool("u", &shares, &items),
            Err(Error::NothingToRecommend(_))
        ));
    }

    fn lists(l1: &[&str], rest: &[&str]) -> FactorLists {
        FactorLists {
            user: "u".into(),
            lists: [
                RankedList::new(Factor::Polarization, ids(l1)),
                RankedList::new(Factor::Exclusivity, ids(rest)),
                RankedList::new(Factor::Acceptance, ids(rest).into_iter().rev().collect()),
                RankedList::new(Factor::Diversity, ids(rest)),
                RankedList::new(Factor::Popularity, ids(rest)),
            ],
        }
    }

    #[test]
    fn degenerate_weights_return_l1() {
        let fl = lists(&["d", "a", "e"], &["a", "b", "c", "d", "e"]);
        let w = FactorWeights::<f64>::new([1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let rec = recommend(&fl, &w, 3, &AggregationConfig::default(), &ShareTable::new()).unwrap();
        let got: Vec<&str> = rec.items.iter().map(|r| r.item.as_str()).collect();
        assert_eq!(got, ["d", "a", "e"]);
        assert!(rec.exact);
        assert_eq!(rec.phi, 0.0);
        assert!(!rec.short_pool);
        for r in &rec.items {
            let total: f64 = r.breakdown.iter().map(|b| b.weight).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn short_pool_is_flagged() {
        let fl = lists(&[], &["a", "b"]);
        let rec = recommend(
            &fl,
            &FactorWeights::<f64>::uniform(),
            3,
            &AggregationConfig::default(),
            &ShareTable::new(),
        )
        .unwrap();
        assert_eq!(rec.items.len(), 2);
        assert!(rec.short_pool);
    }

    #[test]
    fn breakdown_contributions_add_up_to_phi_share() {
        let fl = lists(&["c"], &["a", "b", "c", "d"]);
        let w = FactorWeights::<f64>::uniform();
        let rec = recommend(&fl, &w, 3, &AggregationConfig::default(), &ShareTable::new()).unwrap();
        // contributions cover the selected items only; phi also counts listed
        // items that were left out, so it bounds their sum from above
        let selected: f64 = rec
            .items
            .iter()
            .flat_map(|r| &r.breakdown)
            .map(|b| b.contribution)
            .sum();
        assert!(selected <= rec.phi + 1e-12);
    }

    #[test]
    fn baseline_is_seeded_and_excludes() {
        let pool = ids(&["a", "b", "c", "d", "e", "f"]);
        let exclude: BTreeSet<ItemId> = ids(&["a", "b", "c"]).into_iter().collect();
        let x = random_baseline(&pool, &exclude, 3, 9).unwrap();
        assert_eq!(x, random_baseline(&pool, &exclude, 3, 9).unwrap());
        assert!(x.iter().all(|i| !exclude.contains(i)));
        let exclude: BTreeSet<ItemId> = ids(&["a", "b", "c", "d"]).into_iter().collect();
        assert_eq!(random_baseline(&pool, &exclude, 3, 1).unwrap().len(), 2);
        let all: BTreeSet<ItemId> = pool.iter().cloned().collect();
        assert!(random_baseline(&pool, &all, 3, 1).is_err());
    }
}
