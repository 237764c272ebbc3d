//! Two-sided split of the endorsement graph.
//!
//! The default partitioner is spectral bisection: the sign pattern of the
//! Fiedler vector of the symmetric normalized Laplacian
//! `L = I - D^{-1/2} A D^{-1/2}` of the undirected weighted graph. The vector
//! is found by power iteration on `2I - L` with the trivial eigenvector
//! `D^{1/2} 1` deflated out after every step.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EndorsementGraph, UserId};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    X,
    Y,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::X => Side::Y,
            Side::Y => Side::X,
        }
    }

    pub fn label(self) -> char {
        match self {
            Side::X => 'X',
            Side::Y => 'Y',
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Side> {
        match s {
            "X" | "x" => Ok(Side::X),
            "Y" | "y" => Ok(Side::Y),
            other => Err(Error::UnknownSide(other.to_owned())),
        }
    }
}

/// Side label for every scored user; both sides non-empty.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SideAssignment {
    sides: BTreeMap<UserId, Side>,
}

impl SideAssignment {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (UserId, Side)>) -> Result<Self> {
        let sides: BTreeMap<UserId, Side> = pairs.into_iter().collect();
        let nx = sides.values().filter(|&&s| s == Side::X).count();
        if nx == 0 || nx == sides.len() {
            return Err(Error::Precondition(
                "side assignment must put users on both sides".into(),
            ));
        }
        Ok(SideAssignment { sides })
    }

    pub fn side_of(&self, user: &str) -> Option<Side> {
        self.sides.get(user).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserId, Side)> {
        self.sides.iter().map(|(u, &s)| (u, s))
    }

    pub fn len(&self) -> usize {
        self.sides.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sides.is_empty()
    }

    pub fn members(&self, side: Side) -> impl Iterator<Item = &UserId> {
        self.sides.iter().filter(move |(_, &s)| s == side).map(|(u, _)| u)
    }

    pub fn size(&self, side: Side) -> usize {
        self.members(side).count()
    }

    /// Same bipartition with the labels exchanged.
    pub fn swapped(&self) -> SideAssignment {
        SideAssignment {
            sides: self.sides.iter().map(|(u, s)| (u.clone(), s.opposite())).collect(),
        }
    }

    /// Checks that every vertex of `g` has a side.
    pub fn covers(&self, g: &EndorsementGraph) -> Result<()> {
        match g.users().iter().find(|u| !self.sides.contains_key(u.as_str())) {
            Some(u) => Err(Error::MissingAssignment(u.to_string())),
            None => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            tolerance: 1e-8,
            max_iterations: 10_000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FiedlerVector<T> {
    /// Indexed like the graph's vertices; unit norm, oriented so vertex 0 is
    /// non-negative.
    pub values: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn fiedler_vector<T: Scalar>(g: &EndorsementGraph, cfg: &SpectralConfig) -> Result<FiedlerVector<T>> {
    let n = g.len();
    if n < 2 {
        return Err(Error::GraphTooSmall(n));
    }
    let sqrt_deg: Vec<T> = (0..n)
        .map(|i| T::from_u64(g.degree(i)).unwrap_or_else(T::zero).sqrt())
        .collect();
    if sqrt_deg.iter().any(|d| d.is_zero()) {
        return Err(Error::Precondition(
            "partition requires a connected graph (isolated vertex found)".into(),
        ));
    }
    let norm_deg = sqrt_deg.iter().map(|&s| s * s).sum::<T>().sqrt();
    let trivial: Vec<T> = sqrt_deg.iter().map(|&s| s / norm_deg).collect();

    let deflate_and_normalize = |x: &mut Vec<T>| -> T {
        let proj: T = x.iter().zip(&trivial).map(|(&a, &b)| a * b).sum();
        for (xi, &ti) in x.iter_mut().zip(&trivial) {
            *xi -= proj * ti;
        }
        let norm = x.iter().map(|&a| a * a).sum::<T>().sqrt();
        if norm > T::min_positive_value() {
            for xi in x.iter_mut() {
                *xi /= norm;
            }
        }
        norm
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x: Vec<T> = (0..n).map(|_| T::of(rng.random_range(-1.0..1.0))).collect();
    if deflate_and_normalize(&mut x) <= T::min_positive_value() {
        return Err(Error::Precondition("degenerate initial vector".into()));
    }

    let tol = T::of(cfg.tolerance);
    let tiny = T::of(1e-12);
    let mut iterations = 0;
    let mut converged = false;
    let mut y = vec![T::zero(); n];
    while iterations < cfg.max_iterations {
        iterations += 1;
        for i in 0..n {
            let mut acc = x[i];
            for &(j, w) in g.neighbors(i) {
                acc += T::from_u64(w).unwrap_or_else(T::zero) * x[j] / (sqrt_deg[i] * sqrt_deg[j]);
            }
            y[i] = acc;
        }
        if deflate_and_normalize(&mut y) <= tiny {
            // x already spans the kernel of 2I - L, i.e. the top of the spectrum
            converged = true;
            break;
        }
        let diff = x.iter().zip(&y).map(|(&a, &b)| (a - b).abs()).fold(T::zero(), T::max);
        std::mem::swap(&mut x, &mut y);
        if diff < tol {
            converged = true;
            break;
        }
    }
    if x[0] < T::zero() {
        for xi in x.iter_mut() {
            *xi = -*xi;
        }
    }
    Ok(FiedlerVector {
        values: x,
        iterations,
        converged,
    })
}

/// Splits `g` by the sign of its Fiedler vector. Non-negative entries go to X,
/// and the orientation puts the smallest user id on side X.
pub fn partition<T: Scalar>(g: &EndorsementGraph, cfg: &SpectralConfig) -> Result<SideAssignment> {
    let fv = fiedler_vector::<T>(g, cfg)?;
    let pairs = g.users().iter().zip(&fv.values).map(|(u, &v)| {
        let side = if v >= T::zero() { Side::X } else { Side::Y };
        (u.clone(), side)
    });
    SideAssignment::from_pairs(pairs)
}

/// Reads a `user,side` CSV and checks it covers every vertex of `g`.
/// Rows for users outside `g` are ignored.
pub fn load_assignment(path: &Path, g: &EndorsementGraph) -> Result<SideAssignment> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["user", "side"] {
        return Err(Error::Malformed {
            path: path.to_owned(),
            line: 1,
            message: "expected header `user,side`".into(),
        });
    }
    let mut pairs = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let side: Side = rec[1].parse()?;
        if g.contains(&rec[0]) {
            pairs.push((UserId::from(&rec[0]), side));
        }
    }
    let assignment = SideAssignment::from_pairs(pairs)?;
    assignment.covers(g)?;
    Ok(assignment)
}

pub fn write_assignment(path: &Path, sides: &SideAssignment) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["user", "side"]).map_err(|e| Error::csv(path, e))?;
    for (u, s) in sides.iter() {
        w.write_record([u.as_str(), &s.to_string()])
            .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
