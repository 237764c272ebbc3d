//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the solver code under test.
#![allow(dead_code)]

use std::collections::HashMap;

use contrarian::{EndorsementGraph, GraphBuilder};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Connected graph on `n` vertices: a random spanning tree plus extra edges
/// with probability `p`, weights in 1..=3.
pub fn random_connected_graph(n: usize, p: f64, seed: u64) -> EndorsementGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = |i: usize| format!("v{i:02}");
    let mut b = GraphBuilder::new();
    b.add_user(name(0));
    for i in 1..n {
        let j = rng.random_range(0..i);
        b.add_endorsement(name(i), name(j), rng.random_range(1..=3));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                b.add_endorsement(name(j), name(i), rng.random_range(1..=3));
            }
        }
    }
    b.build().unwrap()
}

/// Symmetric weight matrix of the undirected view.
pub fn weight_matrix(g: &EndorsementGraph) -> DMatrix<f64> {
    let n = g.len();
    let mut w = DMatrix::zeros(n, n);
    for (s, t, c) in g.edges() {
        w[(s, t)] += c as f64;
        w[(t, s)] += c as f64;
    }
    w
}

/// Exact hitting times from an LU solve of `(I - Q) l = 1` over the
/// transient vertices.
pub fn dense_hitting_times(g: &EndorsementGraph, targets: &[usize]) -> Vec<f64> {
    let w = weight_matrix(g);
    let n = g.len();
    let transient: Vec<usize> = (0..n).filter(|i| !targets.contains(i)).collect();
    let m = transient.len();
    let mut a = DMatrix::<f64>::identity(m, m);
    for (r, &i) in transient.iter().enumerate() {
        let deg: f64 = w.row(i).sum();
        for (c, &j) in transient.iter().enumerate() {
            a[(r, c)] -= w[(i, j)] / deg;
        }
    }
    let sol = a.lu().solve(&DVector::from_element(m, 1.0)).expect("non-singular");
    let mut out = vec![0.0; n];
    for (r, &i) in transient.iter().enumerate() {
        out[i] = sol[r];
    }
    out
}

pub struct WalkStats {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
}

/// `walks` random walks spread evenly over the non-target start vertices,
/// each truncated at `cap` steps. Returns per-vertex statistics (empty stats
/// for targets) and the number of truncated walks.
pub fn monte_carlo_hitting_times(
    g: &EndorsementGraph,
    targets: &[usize],
    walks: u64,
    cap: u64,
    seed: u64,
) -> (Vec<WalkStats>, u64) {
    let n = g.len();
    let w = weight_matrix(g);
    let cumulative: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            (0..n)
                .filter(|&j| w[(i, j)] > 0.0)
                .map(|j| {
                    acc += w[(i, j)];
                    (j, acc)
                })
                .collect()
        })
        .collect();
    let is_target: Vec<bool> = (0..n).map(|i| targets.contains(&i)).collect();
    let starts: Vec<usize> = (0..n).filter(|&i| !is_target[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    let mut count = vec![0u64; n];
    let mut truncated = 0;
    for k in 0..walks {
        let start = starts[(k % starts.len() as u64) as usize];
        let mut at = start;
        let mut steps = 0u64;
        while !is_target[at] && steps < cap {
            let row = &cumulative[at];
            let r = rng.random::<f64>() * row.last().unwrap().1;
            let pos = row.partition_point(|&(_, c)| c <= r).min(row.len() - 1);
            at = row[pos].0;
            steps += 1;
        }
        if !is_target[at] {
            truncated += 1;
        }
        let s = steps as f64;
        sum[start] += s;
        sum_sq[start] += s * s;
        count[start] += 1;
    }
    let stats = (0..n)
        .map(|i| {
            if count[i] == 0 {
                return WalkStats {
                    count: 0,
                    mean: 0.0,
                    variance: 0.0,
                };
            }
            let c = count[i] as f64;
            let mean = sum[i] / c;
            WalkStats {
                count: count[i],
                mean,
                variance: (sum_sq[i] / c - mean * mean).max(0.0) * c / (c - 1.0).max(1.0),
            }
        })
        .collect();
    (stats, truncated)
}

/// Top-k footrule with absent elements at rank k+1, written from scratch.
pub fn footrule(delta: &[&str], list: &[&str], k: usize) -> f64 {
    let pos = |xs: &[&str], limit: usize| -> HashMap<String, usize> {
        xs.iter()
            .take(limit)
            .enumerate()
            .map(|(i, x)| (x.to_string(), i + 1))
            .collect()
    };
    let a = pos(delta, delta.len());
    let b = pos(list, k);
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    keys.iter()
        .map(|e| {
            let pa = *a.get(*e).unwrap_or(&(k + 1)) as f64;
            let pb = *b.get(*e).unwrap_or(&(k + 1)) as f64;
            (pa - pb).abs()
        })
        .sum()
}

/// Minimum weighted footrule over every ordered `k`-subset of `pool`.
pub fn exhaustive_optimum(pool: &[&str], lists: &[Vec<&str>], weights: &[f64], k: usize) -> f64 {
    fn go(pool: &[&str], chosen: &mut Vec<usize>, k: usize, eval: &dyn Fn(&[&str]) -> f64, best: &mut f64) {
        if chosen.len() == k {
            let delta: Vec<&str> = chosen.iter().map(|&i| pool[i]).collect();
            *best = best.min(eval(&delta));
            return;
        }
        for i in 0..pool.len() {
            if !chosen.contains(&i) {
                chosen.push(i);
                go(pool, chosen, k, eval, best);
                chosen.pop();
            }
        }
    }
    let eval = |delta: &[&str]| -> f64 { lists.iter().zip(weights).map(|(l, w)| w * footrule(delta, l, k)).sum() };
    let mut best = f64::INFINITY;
    go(pool, &mut Vec::new(), k.min(pool.len()), &eval, &mut best);
    best
}
