use std::collections::BTreeSet;

use super::RankedList;
use crate::graph::ItemId;

/// Spearman footrule between a candidate top-k list and the top-k of `list`.
/// Summed over the union of both; an element missing from either side sits
/// at rank `k + 1`.
pub fn footrule_distance(delta: &[ItemId], list: &RankedList, k: usize) -> usize {
    let top = list.top(k);
    let rank_in = |xs: &[ItemId], e: &ItemId| xs.iter().position(|x| x == e).map_or(k + 1, |p| p + 1);
    let union: BTreeSet<&ItemId> = delta.iter().chain(top).collect();
    union
        .into_iter()
        .map(|e| rank_in(delta, e).abs_diff(rank_in(top, e)))
        .sum()
}
