//! Seeded spring-embedder layout (Fruchterman–Reingold style forces with
//! multiplicative cooling), normalized to the unit square.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EndorsementGraph, UserId};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutConfig {
    pub seed: u64,
    pub iterations: usize,
    pub initial_temperature: f64,
    pub cooling: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            seed: 0,
            iterations: 500,
            initial_temperature: 0.1,
            cooling: 0.95,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayoutResult<T> {
    users: Vec<UserId>,
    positions: Vec<[T; 2]>,
}

impl<T: Scalar> LayoutResult<T> {
    pub fn get(&self, user: &str) -> Option<[T; 2]> {
        self.users
            .binary_search_by(|u| u.as_str().cmp(user))
            .ok()
            .map(|i| self.positions[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&UserId, [T; 2])> {
        self.users.iter().zip(self.positions.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

/// FNV-1a; stable across platforms and releases, unlike `DefaultHasher`.
fn stable_hash(seed: u64, user: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in seed.to_le_bytes().iter().chain(user.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn compute_layout<T: Scalar>(g: &EndorsementGraph, cfg: &LayoutConfig) -> LayoutResult<T> {
    let n = g.len();
    // start positions depend only on (seed, user id), never on input order
    let mut pos: Vec<[T; 2]> = g
        .users()
        .iter()
        .map(|u| {
            let mut rng = ChaCha8Rng::seed_from_u64(stable_hash(cfg.seed, u.as_str()));
            [T::of(rng.random::<f64>()), T::of(rng.random::<f64>())]
        })
        .collect();

    let k = (T::one() / T::of_usize(n.max(1))).sqrt();
    let k2 = k * k;
    let min_dist = T::of(1e-9);
    let mut temperature = T::of(cfg.initial_temperature);
    let cooling = T::of(cfg.cooling);
    let mut disp = vec![[T::zero(); 2]; n];

    for _ in 0..cfg.iterations {
        disp.iter_mut().for_each(|d| *d = [T::zero(); 2]);
        for i in 0..n {
            for j in i + 1..n {
                let (mut dx, mut dy) = (pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]);
                let mut d = (dx * dx + dy * dy).sqrt();
                if d < min_dist {
                    // coincident points: push apart along a pair-specific angle
                    let angle = T::of(((i * 31 + j * 17) % 360) as f64).to_radians();
                    dx = angle.cos() * min_dist;
                    dy = angle.sin() * min_dist;
                    d = min_dist;
                }
                let f = k2 / d;
                let (fx, fy) = (dx / d * f, dy / d * f);
                disp[i][0] += fx;
                disp[i][1] += fy;
                disp[j][0] -= fx;
                disp[j][1] -= fy;
            }
        }
        for i in 0..n {
            for &(j, w) in g.neighbors(i) {
                if j <= i {
                    continue;
                }
                let (dx, dy) = (pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]);
                let d = (dx * dx + dy * dy).sqrt();
                if d < min_dist {
                    continue;
                }
                let f = T::from_u64(w).unwrap_or_else(T::one) * d * d / k;
                let (fx, fy) = (dx / d * f, dy / d * f);
                disp[i][0] -= fx;
                disp[i][1] -= fy;
                disp[j][0] += fx;
                disp[j][1] += fy;
            }
        }
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
            if len > T::zero() {
                let step = len.min(temperature) / len;
                p[0] += d[0] * step;
                p[1] += d[1] * step;
            }
        }
        temperature *= cooling;
    }

    normalize(&mut pos);
    LayoutResult {
        users: g.users().to_vec(),
        positions: pos,
    }
}

fn normalize<T: Scalar>(pos: &mut [[T; 2]]) {
    for axis in 0..2 {
        let lo = pos.iter().map(|p| p[axis]).fold(T::infinity(), T::min);
        let hi = pos.iter().map(|p| p[axis]).fold(T::neg_infinity(), T::max);
        let span = hi - lo;
        for p in pos.iter_mut() {
            p[axis] = if span > T::zero() {
                (p[axis] - lo) / span
            } else {
                T::of(0.5)
            };
        }
    }
}

#[derive(Serialize, Deserialize)]
struct LayoutRow {
    user: UserId,
    x: f64,
    y: f64,
}

/// Layout JSON: an array of `{user, x, y}`.
pub fn write_layout<T: Scalar>(path: &Path, layout: &LayoutResult<T>) -> Result<()> {
    let rows: Vec<LayoutRow> = layout
        .iter()
        .map(|(u, [x, y])| LayoutRow {
            user: u.clone(),
            x: x.as_f64(),
            y: y.as_f64(),
        })
        .collect();
    let text = serde_json::to_string_pretty(&rows).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_layout<T: Scalar>(path: &Path) -> Result<LayoutResult<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<LayoutRow> = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    rows.sort_by(|a, b| a.user.cmp(&b.user));
    Ok(LayoutResult {
        users: rows.iter().map(|r| r.user.clone()).collect(),
        positions: rows.iter().map(|r| [T::of(r.x), T::of(r.y)]).collect(),
    })
}
