//! Bucketed empirical acceptance model `p(u, i) = N_e / N_x`.
//!
//! A user is exposed to an item when someone they have endorsed shared it,
//! and endorsed it when they also shared it themselves. Counts are over
//! distinct (user, item) pairs, bucketed by the two polarities.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use std::collections::BTreeSet;

use crate::dataset::ShareTable;
use crate::error::{Error, Result};
use crate::graph::{EndorsementGraph, ItemId};
use crate::items::ItemTable;
use crate::polarimeter::PolarizationProfile;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct AcceptanceConfig {
    pub buckets: usize,
    /// Laplace smoothing added to `N_e`; twice this is added to `N_x`.
    pub alpha: f64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig {
            buckets: 10,
            alpha: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcceptanceModel<T> {
    buckets: usize,
    alpha: T,
    /// Row-major, rows indexed by the user's bucket.
    endorsed: Vec<u64>,
    exposed: Vec<u64>,
}

impl<T: Scalar> AcceptanceModel<T> {
    pub fn from_counts(buckets: usize, alpha: T, endorsed: Vec<u64>, exposed: Vec<u64>) -> Result<Self> {
        if buckets == 0 {
            return Err(Error::InvalidParameter("at least one bucket required".into()));
        }
        if alpha < T::zero() {
            return Err(Error::InvalidParameter("alpha must be non-negative".into()));
        }
        if endorsed.len() != buckets * buckets || exposed.len() != buckets * buckets {
            return Err(Error::InvalidParameter(format!(
                "count matrices must be {buckets}x{buckets}"
            )));
        }
        if endorsed.iter().zip(&exposed).any(|(e, x)| e > x) {
            return Err(Error::InvalidParameter(
                "endorsement count exceeds exposure count".into(),
            ));
        }
        Ok(AcceptanceModel {
            buckets,
            alpha,
            endorsed,
            exposed,
        })
    }

    pub fn empty(cfg: &AcceptanceConfig) -> Result<Self> {
        let cells = cfg.buckets * cfg.buckets;
        Self::from_counts(cfg.buckets, T::of(cfg.alpha), vec![0; cells], vec![0; cells])
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn bucket_width(&self) -> T {
        T::of(2.0) / T::of_usize(self.buckets)
    }

    /// Uniform bucket over `[-1, 1]`, lower edge inclusive; values outside
    /// clamp to the end buckets. A value a few ulps under an edge counts as
    /// on it, so `-0.8` lands in bucket 1 despite `(1 - 0.8) / 0.2 < 1`.
    pub fn bucket(&self, rho: T) -> usize {
        let raw = (rho + T::one()) / self.bucket_width();
        let slack = T::epsilon() * T::of(16.0) * raw.abs().max(T::one());
        let raw = (raw + slack).floor();
        if raw <= T::zero() {
            0
        } else {
            raw.to_usize().unwrap_or(usize::MAX).min(self.buckets - 1)
        }
    }

    pub fn endorsed(&self, user_bucket: usize, item_bucket: usize) -> u64 {
        self.endorsed[user_bucket * self.buckets + item_bucket]
    }

    pub fn exposed(&self, user_bucket: usize, item_bucket: usize) -> u64 {
        self.exposed[user_bucket * self.buckets + item_bucket]
    }

    /// `(N_e + alpha) / (N_x + 2 alpha)` at the pair's buckets. With
    /// `alpha = 0` an unobserved cell yields 0.
    pub fn accept_prob(&self, rho_u: T, rho_i: T) -> T {
        let (bu, bi) = (self.bucket(rho_u), self.bucket(rho_i));
        let ne = T::from_u64(self.endorsed(bu, bi)).unwrap_or_else(T::zero);
        let nx = T::from_u64(self.exposed(bu, bi)).unwrap_or_else(T::zero);
        let den = nx + self.alpha + self.alpha;
        if den.is_zero() {
            T::zero()
        } else {
            (ne + self.alpha) / den
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.endorsed.iter_mut().zip(other.endorsed) {
            *a += b;
        }
        for (a, b) in self.exposed.iter_mut().zip(other.exposed) {
            *a += b;
        }
        self
    }
}

pub fn fit_acceptance_model<T: Scalar>(
    g: &EndorsementGraph,
    shares: &ShareTable,
    profile: &PolarizationProfile<T>,
    items: &ItemTable<T>,
    cfg: &AcceptanceConfig,
) -> Result<AcceptanceModel<T>> {
    let empty = AcceptanceModel::<T>::empty(cfg)?;
    let model = (0..g.len())
        .into_par_iter()
        .fold(
            || empty.clone(),
            |mut acc, u| {
                let user = g.user(u);
                let Some(rho_u) = profile.rho(user.as_str()) else {
                    return acc;
                };
                let exposure: BTreeSet<&ItemId> = g
                    .out_neighbors(u)
                    .iter()
                    .filter_map(|&v| shares.items_of(g.user(v).as_str()))
                    .flatten()
                    .collect();
                let bu = acc.bucket(rho_u);
                for item in exposure {
                    let Some(score) = items.get(item.as_str()) else {
                        continue;
                    };
                    let cell = bu * acc.buckets + acc.bucket(score.rho);
                    acc.exposed[cell] += 1;
                    if shares.has_shared(user.as_str(), item.as_str()) {
                        acc.endorsed[cell] += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| empty.clone(), AcceptanceModel::merge);
    Ok(model)
}

fn write_matrix(path: &Path, header: &str, buckets: usize, counts: &[u64]) -> Result<()> {
    let mut out = String::new();
    out.push_str(header);
    for row in counts.chunks(buckets) {
        let line: Vec<String> = row.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn read_matrix(path: &Path) -> Result<(usize, f64, Vec<u64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let malformed = |line: usize, message: String| Error::Malformed {
        path: path.to_owned(),
        line: line as u64,
        message,
    };
    let mut lines = text.lines();
    let meta = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or_else(|| malformed(1, "missing `# buckets=..,width=..,alpha=..` header".into()))?;
    let (mut buckets, mut alpha) = (None, None);
    for kv in meta.split(',') {
        match kv.trim().split_once('=') {
            Some(("buckets", v)) => buckets = v.parse::<usize>().ok(),
            Some(("alpha", v)) => alpha = v.parse::<f64>().ok(),
            _ => {}
        }
    }
    let (buckets, alpha) = buckets
        .zip(alpha)
        .ok_or_else(|| malformed(1, "header needs buckets and alpha".into()))?;
    let mut counts = Vec::with_capacity(buckets * buckets);
    for (i, line) in lines.enumerate() {
        for cell in line.split(',') {
            counts.push(
                cell.trim()
                    .parse::<u64>()
                    .map_err(|_| malformed(i + 2, format!("bad count `{cell}`")))?,
            );
        }
    }
    Ok((buckets, alpha, counts))
}

/// Writes the endorsement and exposure matrices, each with a
/// `# buckets=..,width=..,alpha=..` header line.
pub fn write_model<T: Scalar>(model: &AcceptanceModel<T>, endorsed_path: &Path, exposed_path: &Path) -> Result<()> {
    let header = format!(
        "# buckets={},width={},alpha={}\n",
        model.buckets,
        model.bucket_width(),
        model.alpha
    );
    write_matrix(endorsed_path, &header, model.buckets, &model.endorsed)?;
    write_matrix(exposed_path, &header, model.buckets, &model.exposed)
}

pub fn read_model<T: Scalar>(endorsed_path: &Path, exposed_path: &Path) -> Result<AcceptanceModel<T>> {
    let (b1, a1, endorsed) = read_matrix(endorsed_path)?;
    let (b2, a2, exposed) = read_matrix(exposed_path)?;
    if b1 != b2 || a1 != a2 {
        return Err(Error::Precondition(
            "acceptance matrices disagree on buckets or alpha".into(),
        ));
    }
    AcceptanceModel::from_counts(b1, T::of(a1), endorsed, exposed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ShareRecord;
    use crate::graph::{GraphBuilder, UserId};
    use crate::items::compute_item_scores;
    use crate::partition::{Side, SideAssignment};

    fn single_cell(ne: u64, nx: u64, alpha: f64) -> AcceptanceModel<f64> {
        AcceptanceModel::from_counts(1, alpha, vec![ne], vec![nx]).unwrap()
    }

    #[test]
    fn raw_ratio_without_smoothing() {
        assert!((single_cell(3, 10, 0.0).accept_prob(0.1, -0.4) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn smoothing_fills_empty_cells() {
        assert_eq!(single_cell(0, 0, 1.0).accept_prob(0.0, 0.0), 0.5);
    }

    #[test]
    fn outermost_buckets_at_the_edges() {
        let m = AcceptanceModel::<f64>::empty(&AcceptanceConfig::default()).unwrap();
        let eps = 1e-12;
        assert_eq!(m.bucket(1.0 - eps), 9);
        assert_eq!(m.bucket(-1.0 + eps), 0);
        assert_eq!(m.bucket(0.0), 5);
        assert_eq!(m.bucket(-0.2 + eps), 4);
    }

    #[test]
    fn decimal_edges_open_their_bucket() {
        let m = AcceptanceModel::<f64>::empty(&AcceptanceConfig::default()).unwrap();
        let edges = [-1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8];
        for (j, &e) in edges.iter().enumerate() {
            assert_eq!(m.bucket(e), j, "edge {e}");
            if j > 0 {
                assert_eq!(m.bucket(e - 1e-9), j - 1, "just under {e}");
            }
        }
    }

    #[test]
    fn rejects_more_endorsements_than_exposures() {
        assert!(AcceptanceModel::<f64>::from_counts(1, 1.0, vec![2], vec![1]).is_err());
    }

    fn share(user: &str, item: &str) -> ShareRecord {
        ShareRecord {
            user: user.into(),
            item: item.into(),
            tweet_id: format!("{user}/{item}"),
            retweet_count: 0,
            timestamp: 0,
        }
    }

    struct Fixture {
        g: EndorsementGraph,
        profile: PolarizationProfile<f64>,
        sides: SideAssignment,
    }

    fn fixture() -> Fixture {
        let mut b = GraphBuilder::new();
        b.add_endorsement("u", "v", 1);
        let g = b.build().unwrap();
        let profile = PolarizationProfile::from_parts(
            vec![UserId::from("u"), UserId::from("v")],
            vec![0.1, 0.7],
            vec![0.0, 0.0],
        )
        .unwrap();
        let sides = SideAssignment::from_pairs([("u".into(), Side::X), ("v".into(), Side::Y)]).unwrap();
        Fixture { g, profile, sides }
    }

    fn fit(f: &Fixture, shares: &ShareTable) -> AcceptanceModel<f64> {
        let items = compute_item_scores(shares, &f.profile, &f.sides);
        fit_acceptance_model(&f.g, shares, &f.profile, &items, &AcceptanceConfig::default()).unwrap()
    }

    #[test]
    fn exposure_without_endorsement() {
        let f = fixture();
        let shares = ShareTable::from_records([share("v", "i")]);
        let m = fit(&f, &shares);
        let (bu, bi) = (m.bucket(0.1), m.bucket(0.7));
        assert_eq!((m.exposed(bu, bi), m.endorsed(bu, bi)), (1, 0));
        assert_eq!(m.exposed.iter().sum::<u64>(), 1);
    }

    #[test]
    fn exposure_with_endorsement() {
        let f = fixture();
        let shares = ShareTable::from_records([share("v", "i"), share("u", "i"), share("v", "i")]);
        let m = fit(&f, &shares);
        // item rho = mean(0.1, 0.7) = 0.4; pairs are deduplicated
        let (bu, bi) = (m.bucket(0.1), m.bucket(0.4));
        assert_eq!((m.exposed(bu, bi), m.endorsed(bu, bi)), (1, 1));
        assert_eq!(m.exposed.iter().sum::<u64>(), 1);
    }

    #[test]
    fn no_shares_no_counts() {
        let f = fixture();
        let m = fit(&f, &ShareTable::new());
        assert!(m.exposed.iter().chain(&m.endorsed).all(|&c| c == 0));
    }

    #[test]
    fn matrices_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let (e, x) = (dir.path().join("e.csv"), dir.path().join("x.csv"));
        let m = AcceptanceModel::<f64>::from_counts(2, 1.0, vec![0, 1, 2, 3], vec![4, 5, 6, 7]).unwrap();
        write_model(&m, &e, &x).unwrap();
        assert!(std::fs::read_to_string(&e)
            .unwrap()
            .starts_with("# buckets=2,width=1,alpha=1\n"));
        assert_eq!(read_model::<f64>(&e, &x).unwrap(), m);
    }
}
