//! Weighted top-k rank aggregation minimizing `phi(delta) = sum_l w_l d(delta, L_l)`
//! under the footrule distance.
//!
//! Only items in the top-k of some positively weighted list can improve on
//! an item listed nowhere, so the search runs over that union. The objective
//! decomposes into a constant plus one cost per (item, position):
//! `phi(delta) = B + sum_j C[delta_j][j]`, which both solvers use.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{footrule_distance, RankedList};
use crate::error::{Error, Result};
use crate::graph::ItemId;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AggregationMethod {
    /// Exhaustive search up to `exact_limit` candidates, cross-entropy beyond.
    #[default]
    Auto,
    Exact,
    CrossEntropy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregationConfig {
    pub method: AggregationMethod,
    pub exact_limit: usize,
    /// Candidate lists drawn per cross-entropy round.
    pub samples: usize,
    pub elite_fraction: f64,
    /// Rounds the best elite objective must stay put before stopping.
    pub patience: usize,
    pub max_rounds: usize,
    /// Weight of the elite frequencies when updating the position matrix.
    pub smoothing: f64,
    pub seed: u64,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            method: AggregationMethod::Auto,
            exact_limit: 8,
            samples: 2000,
            elite_fraction: 0.1,
            patience: 5,
            max_rounds: 100,
            smoothing: 0.25,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Aggregate<T> {
    pub items: Vec<ItemId>,
    pub phi: T,
    pub exact: bool,
    /// Cross-entropy rounds run; zero for the exact solver.
    pub rounds: usize,
}

struct Problem<T> {
    universe: Vec<ItemId>,
    k: usize,
    /// `cost[e * k + j]`: contribution of item `e` at position `j`.
    cost: Vec<T>,
    base: T,
}

impl<T: Scalar> Problem<T> {
    fn new(lists: &[RankedList], weights: &[T], k: usize) -> Result<Self> {
        let mut universe: BTreeSet<&ItemId> = lists
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > T::zero())
            .flat_map(|(l, _)| l.top(k))
            .collect();
        // too few weighted candidates: fill from every list in rank order
        for item in lists.iter().flat_map(|l| l.items()) {
            if universe.len() >= k {
                break;
            }
            universe.insert(item);
        }
        if universe.is_empty() {
            return Err(Error::EmptyLists);
        }
        let universe: Vec<ItemId> = universe.into_iter().cloned().collect();
        let k = k.min(universe.len());
        let absent = k + 1;
        let mut cost = vec![T::zero(); universe.len() * k];
        let mut base = T::zero();
        for (list, &w) in lists.iter().zip(weights) {
            if w <= T::zero() {
                continue;
            }
            let top = list.top(k);
            for (p, _) in top.iter().enumerate() {
                base += w * T::of_usize(absent - (p + 1));
            }
            for (e, item) in universe.iter().enumerate() {
                let pos = top.iter().position(|x| x == item).map_or(absent, |p| p + 1);
                let listed_bonus = if pos <= k { absent - pos } else { 0 };
                for j in 0..k {
                    let d = (j + 1).abs_diff(pos);
                    cost[e * k + j] += w * (T::of_usize(d) - T::of_usize(listed_bonus));
                }
            }
        }
        Ok(Problem {
            universe,
            k,
            cost,
            base,
        })
    }

    fn objective(&self, seq: &[usize]) -> T {
        self.base
            + seq
                .iter()
                .enumerate()
                .map(|(j, &e)| self.cost[e * self.k + j])
                .sum::<T>()
    }

    /// Depth-first enumeration of every ordered k-subset; the first minimum
    /// in lexicographic order wins ties (equal up to rounding).
    fn solve_exact(&self) -> Vec<usize> {
        let m = self.universe.len();
        let mut best: Option<(T, Vec<usize>)> = None;
        let mut seq = Vec::with_capacity(self.k);
        let mut used = vec![false; m];
        self.enumerate(&mut seq, &mut used, &mut best);
        best.expect("at least one candidate list").1
    }

    fn enumerate(&self, seq: &mut Vec<usize>, used: &mut [bool], best: &mut Option<(T, Vec<usize>)>) {
        if seq.len() == self.k {
            let value = self.objective(seq);
            let improves = match best {
                None => true,
                Some((b, _)) => value < *b - T::of(1e-9) * b.abs().max(T::one()),
            };
            if improves {
                *best = Some((value, seq.clone()));
            }
            return;
        }
        for e in 0..used.len() {
            if !used[e] {
                used[e] = true;
                seq.push(e);
                self.enumerate(seq, used, best);
                seq.pop();
                used[e] = false;
            }
        }
    }

    fn solve_cross_entropy(&self, cfg: &AggregationConfig) -> (Vec<usize>, usize) {
        let (m, k) = (self.universe.len(), self.k);
        let samples = cfg.samples.max(1);
        let elite = ((cfg.elite_fraction * samples as f64).ceil() as usize).clamp(1, samples);
        let mut probs = vec![1.0 / m as f64; m * k];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut best: Option<(T, Vec<usize>)> = None;
        let mut last_elite: Option<T> = None;
        let mut unchanged = 0;
        let mut rounds = 0;
        let mut drawn: Vec<(T, Vec<usize>)> = Vec::with_capacity(samples);
        let mut used = vec![false; m];
        while rounds < cfg.max_rounds {
            rounds += 1;
            drawn.clear();
            for _ in 0..samples {
                used.iter_mut().for_each(|u| *u = false);
                let mut seq = Vec::with_capacity(k);
                for j in 0..k {
                    let total: f64 = (0..m).filter(|&e| !used[e]).map(|e| probs[e * k + j]).sum();
                    let pick = if total > 0.0 {
                        let mut r = rng.random::<f64>() * total;
                        let mut chosen = None;
                        for e in (0..m).filter(|&e| !used[e]) {
                            chosen = Some(e);
                            r -= probs[e * k + j];
                            if r < 0.0 {
                                break;
                            }
                        }
                        chosen.expect("an unused item remains")
                    } else {
                        let free: Vec<usize> = (0..m).filter(|&e| !used[e]).collect();
                        free[rng.random_range(0..free.len())]
                    };
                    used[pick] = true;
                    seq.push(pick);
                }
                drawn.push((self.objective(&seq), seq));
            }
            // stable: equal objectives keep draw order
            drawn.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite objective"));
            let round_best = drawn[0].0;
            if best.as_ref().is_none_or(|(b, _)| round_best < *b) {
                best = Some(drawn[0].clone());
            }
            let mut freq = vec![0.0; m * k];
            for (_, seq) in &drawn[..elite] {
                for (j, &e) in seq.iter().enumerate() {
                    freq[e * k + j] += 1.0;
                }
            }
            for (p, f) in probs.iter_mut().zip(&freq) {
                *p = (1.0 - cfg.smoothing) * *p + cfg.smoothing * f / elite as f64;
            }
            let tol = T::of(1e-12) * round_best.abs().max(T::one());
            match last_elite {
                Some(prev) if (prev - round_best).abs() <= tol => unchanged += 1,
                _ => unchanged = 0,
            }
            last_elite = Some(round_best);
            if unchanged >= cfg.patience {
                break;
            }
        }
        (best.expect("at least one round").1, rounds)
    }
}

/// Top-k list minimizing the weighted footrule distance to `lists`.
/// `weights` pairs with `lists` and need not be normalized.
pub fn aggregate_rankings<T: Scalar>(
    lists: &[RankedList],
    weights: &[T],
    k: usize,
    cfg: &AggregationConfig,
) -> Result<Aggregate<T>> {
    if lists.is_empty() || lists.iter().all(RankedList::is_empty) {
        return Err(Error::EmptyLists);
    }
    if lists.len() != weights.len() {
        return Err(Error::InvalidParameter(format!(
            "{} lists but {} weights",
            lists.len(),
            weights.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let problem = Problem::new(lists, weights, k)?;
    let exact = match cfg.method {
        AggregationMethod::Exact => true,
        AggregationMethod::CrossEntropy => false,
        AggregationMethod::Auto => problem.universe.len() <= cfg.exact_limit,
    };
    let (seq, rounds) = if exact {
        (problem.solve_exact(), 0)
    } else {
        problem.solve_cross_entropy(cfg)
    };
    let items: Vec<ItemId> = seq.iter().map(|&e| problem.universe[e].clone()).collect();
    let phi = lists
        .iter()
        .zip(weights)
        .map(|(l, &w)| w * T::of_usize(footrule_distance(&items, l, problem.k)))
        .sum();
    Ok(Aggregate {
        items,
        phi,
        exact,
        rounds,
    })
}
