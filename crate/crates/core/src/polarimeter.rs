//! Random-walk polarization scores.
//!
//! For each side, `l(u)` is the expected number of steps a walk on the
//! undirected weighted graph needs from `u` to reach any hub of that side:
//! `l(u) = 0` on hubs and `l(u) = 1 + sum_w P(u, w) l(w)` elsewhere, with
//! `P(u, w) = w(u, w) / deg(u)`. The system is solved by Jacobi sweeps.
//!
//! `rho_x(u)` is the fraction of users whose `l_x` is strictly smaller than
//! `l_x(u)`; `rho(u) = rho_x(u) - rho_y(u)`.

use crate::error::{Error, Result};
use crate::graph::{EndorsementGraph, HubSet, UserId};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Max-norm bound on `1 + P l - l` over transient vertices.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-8,
            max_iterations: 100_000,
        }
    }
}

/// Expected hitting times to one hub set, aligned with the graph's vertex order.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingTimes<T> {
    users: Vec<UserId>,
    values: Vec<T>,
    pub iterations: usize,
    pub residual: T,
}

impl<T: Scalar> HittingTimes<T> {
    /// Builds from stored values; `users` must be sorted and unique.
    pub fn from_parts(users: Vec<UserId>, values: Vec<T>) -> Result<Self> {
        if users.len() != values.len() || users.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition(
                "hitting times need sorted unique users, one value each".into(),
            ));
        }
        Ok(HittingTimes {
            users,
            values,
            iterations: 0,
            residual: T::zero(),
        })
    }

    pub fn get(&self, user: &str) -> Option<T> {
        self.users
            .binary_search_by(|u| u.as_str().cmp(user))
            .ok()
            .map(|i| self.values[i])
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserId, T)> {
        self.users.iter().zip(self.values.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Solves for the expected number of steps to reach any of `targets`.
pub fn expected_hitting_times<T: Scalar>(
    g: &EndorsementGraph,
    targets: &[UserId],
    cfg: &SolverConfig,
) -> Result<HittingTimes<T>> {
    if targets.is_empty() {
        return Err(Error::Precondition("hitting times need at least one target".into()));
    }
    if !g.is_connected() {
        return Err(Error::Precondition(
            "hitting times need a connected graph; restrict to the largest component first".into(),
        ));
    }
    let n = g.len();
    let mut absorbing = vec![false; n];
    for t in targets {
        absorbing[g.require(t.as_str())?] = true;
    }
    // row-normalized transition weights, computed once
    let rows: Vec<Vec<(usize, T)>> = (0..n)
        .map(|i| {
            let deg = T::from_u64(g.degree(i)).unwrap_or_else(T::zero);
            g.neighbors(i)
                .iter()
                .map(|&(j, w)| (j, T::from_u64(w).unwrap_or_else(T::zero) / deg))
                .collect()
        })
        .collect();

    let tol = T::of(cfg.tolerance);
    let mut current = vec![T::zero(); n];
    let mut next = vec![T::zero(); n];
    let mut residual = T::infinity();
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        residual = T::zero();
        for i in 0..n {
            if absorbing[i] {
                continue;
            }
            let mut acc = T::one();
            for &(j, p) in &rows[i] {
                acc += p * current[j];
            }
            residual = residual.max((acc - current[i]).abs());
            next[i] = acc;
        }
        std::mem::swap(&mut current, &mut next);
        if residual <= tol {
            break;
        }
    }
    if residual > tol {
        return Err(Error::NotConverged {
            iterations,
            residual: residual.as_f64(),
        });
    }
    Ok(HittingTimes {
        users: g.users().to_vec(),
        values: current,
        iterations,
        residual,
    })
}

/// Per-user percentile scores for both sides and their difference.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarizationProfile<T> {
    users: Vec<UserId>,
    rho_x: Vec<T>,
    rho_y: Vec<T>,
    rho: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UserPolarization<T> {
    pub rho_x: T,
    pub rho_y: T,
    pub rho: T,
}

impl<T: Scalar> PolarizationProfile<T> {
    pub fn from_parts(users: Vec<UserId>, rho_x: Vec<T>, rho_y: Vec<T>) -> Result<Self> {
        if users.len() != rho_x.len() || users.len() != rho_y.len() || users.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("malformed polarization profile".into()));
        }
        let rho = rho_x.iter().zip(&rho_y).map(|(&a, &b)| a - b).collect();
        Ok(PolarizationProfile {
            users,
            rho_x,
            rho_y,
            rho,
        })
    }

    fn position(&self, user: &str) -> Option<usize> {
        self.users.binary_search_by(|u| u.as_str().cmp(user)).ok()
    }

    pub fn get(&self, user: &str) -> Option<UserPolarization<T>> {
        self.position(user).map(|i| UserPolarization {
            rho_x: self.rho_x[i],
            rho_y: self.rho_y[i],
            rho: self.rho[i],
        })
    }

    pub fn rho(&self, user: &str) -> Option<T> {
        self.position(user).map(|i| self.rho[i])
    }

    pub fn contains(&self, user: &str) -> bool {
        self.position(user).is_some()
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserId, UserPolarization<T>)> + '_ {
        (0..self.users.len()).map(move |i| {
            (
                &self.users[i],
                UserPolarization {
                    rho_x: self.rho_x[i],
                    rho_y: self.rho_y[i],
                    rho: self.rho[i],
                },
            )
        })
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

/// Relative width within which two hitting times count as tied. Absorbs
/// rounding differences between vertices that are equivalent by symmetry.
fn tie_tolerance<T: Scalar>() -> T {
    T::epsilon().sqrt()
}

/// Values strictly below `value` up to the tie tolerance.
fn count_below<T: Scalar>(sorted: &[T], value: T) -> usize {
    let threshold = value - tie_tolerance::<T>() * value.abs().max(T::one());
    sorted.partition_point(|&v| v < threshold)
}

fn sorted_values<T: Scalar>(values: &[T]) -> Vec<T> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite hitting times"));
    sorted
}

fn percentiles<T: Scalar>(values: &[T]) -> Vec<T> {
    let sorted = sorted_values(values);
    let n = T::of_usize(values.len());
    values
        .iter()
        .map(|&v| T::of_usize(count_below(&sorted, v)) / n)
        .collect()
}

pub fn user_polarization<T: Scalar>(
    times_x: &HittingTimes<T>,
    times_y: &HittingTimes<T>,
) -> Result<PolarizationProfile<T>> {
    if times_x.users != times_y.users {
        return Err(Error::Precondition(
            "hitting times for X and Y cover different users".into(),
        ));
    }
    if times_x.is_empty() {
        return Err(Error::EmptyGraph);
    }
    PolarizationProfile::from_parts(
        times_x.users.clone(),
        percentiles(&times_x.values),
        percentiles(&times_y.values),
    )
}

/// Hitting times for both sides plus the resulting profile, with the sorted
/// populations kept for percentile queries.
#[derive(Clone, Debug)]
pub struct Polarization<T> {
    pub times_x: HittingTimes<T>,
    pub times_y: HittingTimes<T>,
    pub profile: PolarizationProfile<T>,
    sorted_x: Vec<T>,
    sorted_y: Vec<T>,
}

impl<T: Scalar> Polarization<T> {
    pub fn new(times_x: HittingTimes<T>, times_y: HittingTimes<T>) -> Result<Self> {
        let profile = user_polarization(&times_x, &times_y)?;
        let sorted_x = sorted_values(&times_x.values);
        let sorted_y = sorted_values(&times_y.values);
        Ok(Polarization {
            times_x,
            times_y,
            profile,
            sorted_x,
            sorted_y,
        })
    }

    pub fn compute(g: &EndorsementGraph, hubs_x: &HubSet, hubs_y: &HubSet, cfg: &SolverConfig) -> Result<Self> {
        let (tx, ty) = rayon::join(
            || expected_hitting_times(g, &hubs_x.members, cfg),
            || expected_hitting_times(g, &hubs_y.members, cfg),
        );
        Self::new(tx?, ty?)
    }

    /// Percentile of a hypothetical hitting time for `user` against everyone
    /// else's unchanged values.
    fn shifted_percentile(sorted: &[T], own: T, candidate: T) -> T {
        let mut below = count_below(sorted, candidate);
        if below > 0 && count_below(&[own], candidate) == 1 {
            below -= 1;
        }
        T::of_usize(below) / T::of_usize(sorted.len())
    }
}

/// First-order polarization decrease `|rho(u)| - |rho'(u)|` if `u` endorsed
/// `new_target` once more. Only `u`'s transition row changes; every other
/// hitting time is held fixed and `u`'s percentiles are recomputed against
/// them.
pub fn delta_polarization<T: Scalar>(
    g: &EndorsementGraph,
    pol: &Polarization<T>,
    user: &str,
    new_target: &str,
) -> Result<T> {
    if user == new_target {
        return Err(Error::Precondition("new target must differ from the user".into()));
    }
    let u = g.require(user)?;
    let t = g.require(new_target)?;
    let lx = pol.times_x.values[u];
    let ly = pol.times_y.values[u];
    if lx.is_zero() || ly.is_zero() {
        return Err(Error::Precondition(format!("`{user}` is a hub")));
    }
    let new_rho_x = Polarization::shifted_percentile(&pol.sorted_x, lx, row_update(g, &pol.times_x, u, t));
    let new_rho_y = Polarization::shifted_percentile(&pol.sorted_y, ly, row_update(g, &pol.times_y, u, t));
    let rho = pol.profile.rho[u];
    Ok(rho.abs() - (new_rho_x - new_rho_y).abs())
}

/// The updated hitting time of `user` toward one side after the extra edge.
pub fn first_order_hitting_time<T: Scalar>(
    g: &EndorsementGraph,
    times: &HittingTimes<T>,
    user: &str,
    new_target: &str,
) -> Result<T> {
    Ok(row_update(g, times, g.require(user)?, g.require(new_target)?))
}

/// `1 + sum_w P'(u, w) l(w)` with one unit of weight added on `(u, t)`.
fn row_update<T: Scalar>(g: &EndorsementGraph, times: &HittingTimes<T>, u: usize, t: usize) -> T {
    let mut acc = times.values[t];
    for &(j, w) in g.neighbors(u) {
        acc += T::from_u64(w).unwrap_or_else(T::zero) * times.values[j];
    }
    T::one() + acc / (T::from_u64(g.degree(u)).unwrap_or_else(T::zero) + T::one())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    fn graph(edges: &[(&str, &str)]) -> EndorsementGraph {
        let mut b = GraphBuilder::new();
        for &(s, t) in edges {
            b.add_endorsement(s, t, 1);
        }
        b.build().unwrap()
    }

    fn ids(xs: &[&str]) -> Vec<UserId> {
        xs.iter().map(|&s| UserId::from(s)).collect()
    }

    #[test]
    fn path_graph_hitting_times() {
        // l(b) = 1 + l(c)/2, l(c) = 1 + l(b)  =>  l(b) = 3, l(c) = 4
        let g = graph(&[("a", "b"), ("b", "c")]);
        let l = expected_hitting_times::<f64>(&g, &ids(&["a"]), &SolverConfig::default()).unwrap();
        assert_eq!(l.get("a"), Some(0.0));
        assert!((l.get("b").unwrap() - 3.0).abs() < 1e-7);
        assert!((l.get("c").unwrap() - 4.0).abs() < 1e-7);
    }

    #[test]
    fn star_leaves_hit_center_in_one_step() {
        let g = graph(&[("t", "a"), ("b", "t"), ("t", "c"), ("d", "t")]);
        let l = expected_hitting_times::<f64>(&g, &ids(&["t"]), &SolverConfig::default()).unwrap();
        for leaf in ["a", "b", "c", "d"] {
            assert_eq!(l.get(leaf), Some(1.0));
        }
    }

    #[test]
    fn single_precision_solve() {
        let g = graph(&[("a", "b"), ("b", "c")]);
        let l = expected_hitting_times::<f32>(
            &g,
            &ids(&["a"]),
            &SolverConfig {
                tolerance: 1e-5,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((l.get("c").unwrap() - 4.0).abs() < 1e-4);
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let g = graph(&[("a", "b"), ("b", "c"), ("c", "d"), ("d", "e")]);
        let cfg = SolverConfig {
            tolerance: 1e-12,
            max_iterations: 3,
        };
        match expected_hitting_times::<f64>(&g, &ids(&["a"]), &cfg) {
            Err(Error::NotConverged {
                iterations: 3,
                residual,
            }) => assert!(residual > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let mut b = GraphBuilder::new();
        b.add_endorsement("a", "b", 1).add_user("z");
        let g = b.build().unwrap();
        assert!(expected_hitting_times::<f64>(&g, &ids(&["a"]), &SolverConfig::default()).is_err());
    }

    fn times(values: &[(&str, f64)]) -> HittingTimes<f64> {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.0.cmp(b.0));
        HittingTimes::from_parts(
            v.iter().map(|p| UserId::from(p.0)).collect(),
            v.iter().map(|p| p.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn percentile_is_strict_fraction() {
        let lx = times(&[("a", 0.0), ("b", 2.0), ("c", 3.0), ("d", 4.0)]);
        let ly = times(&[("a", 4.0), ("b", 0.0), ("c", 3.0), ("d", 3.0)]);
        let p = user_polarization(&lx, &ly).unwrap();
        assert_eq!(p.get("c").unwrap().rho_x, 0.5);
        // a: minimal l_x and maximal l_y
        let a = p.get("a").unwrap();
        assert_eq!((a.rho_x, a.rho_y, a.rho), (0.0, 0.75, -0.75));
        // c and d tie on l_y
        assert_eq!(p.get("c").unwrap().rho_y, p.get("d").unwrap().rho_y);
    }

    #[test]
    fn mismatched_users_are_rejected() {
        let lx = times(&[("a", 0.0), ("b", 1.0)]);
        let ly = times(&[("a", 0.0), ("c", 1.0)]);
        assert!(user_polarization(&lx, &ly).is_err());
    }

    fn barbell() -> EndorsementGraph {
        let mut edges = Vec::new();
        let a = ["a1", "a2", "a3", "a4"];
        let b = ["b1", "b2", "b3", "b4"];
        for clique in [a, b] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((clique[i], clique[j]));
                }
            }
        }
        edges.push(("a1", "c"));
        edges.push(("c", "b1"));
        graph(&edges)
    }

    #[test]
    fn symmetric_barbell_center_is_neutral() {
        let g = barbell();
        let cfg = SolverConfig::default();
        let hx = HubSet {
            side: crate::Side::X,
            members: ids(&["a2"]),
        };
        let hy = HubSet {
            side: crate::Side::Y,
            members: ids(&["b2"]),
        };
        let pol = Polarization::<f64>::compute(&g, &hx, &hy, &cfg).unwrap();
        assert_eq!(pol.profile.rho("c"), Some(0.0));
        for (m, n) in [("a1", "b1"), ("a3", "b3"), ("a2", "b2")] {
            assert_eq!(pol.profile.rho(m).unwrap(), -pol.profile.rho(n).unwrap());
        }
        // hubs sit at the bottom of their own side's percentile scale
        assert_eq!(pol.profile.get("a2").unwrap().rho_x, 0.0);
        assert!(pol.profile.rho("a2").unwrap() < 0.0);
    }

    #[test]
    fn one_row_update_matches_hand_formula() {
        // u - w - ... - a, with l_x(w) = 4 so l_x(u) = 5
        let g = graph(&[("a", "p"), ("p", "q"), ("q", "w"), ("w", "u"), ("w", "r"), ("r", "q")]);
        let cfg = SolverConfig::default();
        let tx = expected_hitting_times::<f64>(&g, &ids(&["a"]), &cfg).unwrap();
        let lw = tx.get("w").unwrap();
        assert!((tx.get("u").unwrap() - (1.0 + lw)).abs() < 1e-6);
        let updated = first_order_hitting_time(&g, &tx, "u", "a").unwrap();
        assert!((updated - (1.0 + (lw + 0.0) / 2.0)).abs() < 1e-6);
    }

    #[test]
    fn neighborhood_mean_target_keeps_hitting_time() {
        // c and e mirror each other, so l(c) is the mean over u's neighbors
        let g = graph(&[("a", "c"), ("a", "e"), ("c", "u"), ("e", "u"), ("c", "d"), ("e", "f")]);
        let cfg = SolverConfig::default();
        let tx = expected_hitting_times::<f64>(&g, &ids(&["a"]), &cfg).unwrap();
        let lu = tx.get("u").unwrap();
        assert!((tx.get("c").unwrap() - tx.get("e").unwrap()).abs() < 1e-6);
        let updated = first_order_hitting_time(&g, &tx, "u", "c").unwrap();
        assert!((updated - lu).abs() < 1e-6);
    }

    #[test]
    fn delta_rejects_hub_and_self() {
        let g = barbell();
        let hx = HubSet {
            side: crate::Side::X,
            members: ids(&["a2"]),
        };
        let hy = HubSet {
            side: crate::Side::Y,
            members: ids(&["b2"]),
        };
        let pol = Polarization::<f64>::compute(&g, &hx, &hy, &SolverConfig::default()).unwrap();
        assert!(delta_polarization(&g, &pol, "a2", "b2").is_err());
        assert!(delta_polarization(&g, &pol, "a3", "a3").is_err());
        assert!(delta_polarization(&g, &pol, "a3", "b2").unwrap() > 0.0);
    }
}
