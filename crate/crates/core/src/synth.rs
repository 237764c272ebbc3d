//! Planted two-block generators for tests, demos and the bundled dataset.

use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{write_edges, write_shares, ShareRecord, ShareTable};
use crate::error::{Error, Result};
use crate::graph::{EndorsementGraph, GraphBuilder, ItemId, UserId};
use crate::partition::{write_assignment, Side, SideAssignment};
use crate::topics::TextCorpus;

fn check_probabilities(n: usize, p_in: f64, p_out: f64) -> Result<()> {
    if n < 2 || n & 1 != 0 {
        return Err(Error::InvalidParameter(format!(
            "n must be even and at least 2, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_out > p_in {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= p_out <= p_in <= 1, got p_in={p_in}, p_out={p_out}"
        )));
    }
    Ok(())
}

/// Block membership of `u{i}`: the first half of the indices is block X.
fn planted_side(i: usize, n: usize) -> Side {
    if i < n / 2 {
        Side::X
    } else {
        Side::Y
    }
}

fn user_name(i: usize) -> UserId {
    UserId::new(format!("u{i}"))
}

/// Two blocks of `n/2` users named `u0..u{n-1}`. Each unordered pair is linked
/// with probability `p_in` inside a block and `p_out` across, pointing in a
/// random direction. Returns the graph and the planted labels.
pub fn synth_polarized_graph(n: usize, p_in: f64, p_out: f64, seed: u64) -> Result<(EndorsementGraph, SideAssignment)> {
    check_probabilities(n, p_in, p_out)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_user(user_name(i));
    }
    for i in 0..n {
        for j in i + 1..n {
            let p = if planted_side(i, n) == planted_side(j, n) {
                p_in
            } else {
                p_out
            };
            if rng.random_bool(p) {
                let (s, t) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
                b.add_endorsement(user_name(s), user_name(t), 1);
            }
        }
    }
    let planted = SideAssignment::from_pairs((0..n).map(|i| (user_name(i), planted_side(i, n))))?;
    Ok((b.build()?, planted))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub seed: u64,
    pub items: usize,
    /// Users outside the main component; they share links but are never scored.
    pub lurkers: usize,
    pub share_same_side: f64,
    pub share_cross_side: f64,
    pub share_neutral: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n: 200,
            p_in: 0.3,
            p_out: 0.01,
            seed: 7,
            items: 60,
            lurkers: 3,
            share_same_side: 0.08,
            share_cross_side: 0.01,
            share_neutral: 0.04,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub graph: EndorsementGraph,
    pub shares: ShareTable,
    pub texts: TextCorpus,
    pub planted: SideAssignment,
}

const X_TOPICS: &[&str] = &[
    "#GreenDeal",
    "Climate Summit",
    "Solar Farms",
    "Carbon Tax",
    "Wind Power",
];
const Y_TOPICS: &[&str] = &[
    "#EnergyFreedom",
    "Coal Country",
    "Gas Prices",
    "Pipeline Jobs",
    "Oil Fields",
];
const COMMON_TOPICS: &[&str] = &["Parliament", "#Budget", "Europe", "Stock Markets"];

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool.choose(rng).expect("non-empty vocabulary")
}

/// Graph, shares and short texts with a planted two-sided structure. Item
/// leanings cycle X, Y, neutral; users share same-leaning items more often.
pub fn synth_dataset(cfg: &SynthConfig) -> Result<SynthDataset> {
    let (core, planted) = synth_polarized_graph(cfg.n, cfg.p_in, cfg.p_out, cfg.seed)?;
    // separate stream so the graph matches `synth_polarized_graph` for the same seed
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_da7a);

    let mut b = GraphBuilder::new();
    for (s, t, _) in core.edges() {
        // repeat endorsements now and then
        let count = 1 + u64::from(rng.random_bool(0.2)) + u64::from(rng.random_bool(0.05));
        b.add_endorsement(core.user(s).clone(), core.user(t).clone(), count);
    }
    for u in core.users() {
        b.add_user(u.clone());
    }
    let lurkers: Vec<UserId> = (0..cfg.lurkers).map(|i| UserId::new(format!("lurker{i}"))).collect();
    for l in &lurkers {
        b.add_user(l.clone());
    }
    let graph = b.build()?;

    let mut shares = ShareTable::new();
    let mut texts = TextCorpus::default();
    let mut tweet = 0u64;
    for i in 0..cfg.items {
        let leaning = match i % 3 {
            0 => Some(Side::X),
            1 => Some(Side::Y),
            _ => None,
        };
        let tag = leaning.map_or("both", |s| if s == Side::X { "x" } else { "y" });
        let canonical = format!("https://news.example.org/{tag}/story-{i}");
        let vocab: &[&str] = match leaning {
            Some(Side::X) => X_TOPICS,
            Some(Side::Y) => Y_TOPICS,
            None => COMMON_TOPICS,
        };
        let text = format!(
            "report on {} and {} ahead of {}",
            pick(&mut rng, vocab),
            pick(&mut rng, vocab),
            pick(&mut rng, COMMON_TOPICS)
        );
        texts
            .items
            .entry(ItemId::new(canonical.clone()))
            .or_default()
            .push(text);

        let mut sharers: Vec<&UserId> = core
            .users()
            .iter()
            .filter(|u| {
                let side = planted.side_of(u.as_str()).expect("planted covers graph");
                let p = match leaning {
                    None => cfg.share_neutral,
                    Some(l) if l == side => cfg.share_same_side,
                    Some(_) => cfg.share_cross_side,
                };
                rng.random_bool(p)
            })
            .collect();
        if i % 7 == 6 && !lurkers.is_empty() {
            // an item nobody in the main component shared
            sharers.clear();
        }
        if i % 7 == 6 || i % 11 == 0 {
            sharers.extend(lurkers.iter().filter(|_| rng.random_bool(0.5)));
        }
        if sharers.is_empty() {
            sharers.push(&core.users()[rng.random_range(0..core.len())]);
        }
        for u in sharers {
            tweet += 1;
            // tracking parameters and fragments exercise URL normalization
            let url = match tweet % 4 {
                0 => format!("{canonical}?utm_source=twitter&utm_medium=social"),
                1 => format!("{canonical}#comments"),
                _ => canonical.clone(),
            };
            shares.push(ShareRecord {
                user: u.clone(),
                item: ItemId::new(url),
                tweet_id: format!("t{tweet}"),
                retweet_count: rng.random_range(0..50u64) * rng.random_range(1..5u64),
                timestamp: 1_420_070_400 + rng.random_range(0..2_592_000i64),
            });
        }
    }

    for u in core.users() {
        let side = planted.side_of(u.as_str()).expect("planted covers graph");
        let vocab = if side == Side::X { X_TOPICS } else { Y_TOPICS };
        if rng.random_bool(0.7) {
            let text = format!(
                "thoughts on {} today, also {}",
                pick(&mut rng, vocab),
                pick(&mut rng, COMMON_TOPICS)
            );
            texts.users.entry(u.clone()).or_default().push(text);
        }
    }

    Ok(SynthDataset {
        graph,
        shares,
        texts,
        planted,
    })
}

/// Writes `edges.csv`, `shares.csv`, `texts.csv` and `planted.csv` into `dir`.
/// Share URLs are written raw so ingestion does the normalization.
pub fn write_synth_dataset(dir: &Path, data: &SynthDataset) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_edges(&dir.join("edges.csv"), &data.graph)?;
    write_shares(&dir.join("shares.csv"), &data.shares)?;
    data.texts.write(&dir.join("texts.csv"))?;
    write_assignment(&dir.join("planted.csv"), &data.planted)
}
