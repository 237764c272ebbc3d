//! Stage artifacts in a topic directory and the bundle the service loads.
//!
//! Every file is plain CSV or JSON. Floats are written in shortest
//! round-trip form so reading an artifact back reproduces the exact values.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acceptance::{read_model, write_model, AcceptanceModel};
use crate::dataset::{load_edges, load_shares, write_edges, write_shares, ShareTable};
use crate::error::{Error, Result};
use crate::graph::{EndorsementGraph, HubSet, ItemId, UserId};
use crate::items::{ItemScore, ItemTable};
use crate::layout::{read_layout, write_layout, LayoutResult};
use crate::partition::{load_assignment, write_assignment, Side, SideAssignment};
use crate::polarimeter::{HittingTimes, Polarization};
use crate::recommend::{AggregationConfig, FactorLists, Recommendation};
use crate::scalar::Scalar;
use crate::topics::{TopicModel, TopicVector};

pub mod files {
    pub const EDGES: &str = "edges.csv";
    pub const SHARES: &str = "shares.csv";
    pub const TEXTS: &str = "texts.csv";
    pub const ANNOTATIONS: &str = "annotations.csv";
    pub const GRAPH: &str = "graph.csv";
    pub const CLEAN_SHARES: &str = "shares_clean.csv";
    pub const EXCLUDED: &str = "excluded.csv";
    pub const SIDES: &str = "sides.csv";
    pub const HUBS: &str = "hubs.csv";
    pub const SCORES: &str = "scores.csv";
    pub const ITEMS: &str = "items.csv";
    pub const ENDORSED: &str = "acceptance_endorsed.csv";
    pub const EXPOSED: &str = "acceptance_exposed.csv";
    pub const TOPICS: &str = "topics.csv";
    pub const FACTOR_LISTS: &str = "factor_lists.json";
    pub const RECOMMENDATIONS: &str = "recommendations.csv";
    pub const LAYOUT: &str = "layout.json";
    pub const MANIFEST: &str = "bundle.json";
    pub const ABOUT: &str = "about.md";
}

/// Path of `file` in `dir`, or an error telling the caller to run `stage`.
pub fn require(dir: &Path, file: &str, stage: &'static str) -> Result<PathBuf> {
    let path = dir.join(file);
    if path.is_file() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact { stage, path })
    }
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

fn read_rows<R: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<R>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    rdr.deserialize().map(|r| r.map_err(|e| Error::csv(path, e))).collect()
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = writer(path)?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<V: Serialize + ?Sized>(path: &Path, value: &V) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<V: serde::de::DeserializeOwned>(path: &Path) -> Result<V> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

#[derive(Serialize, Deserialize)]
struct UserRow {
    user: UserId,
}

pub fn write_excluded(path: &Path, excluded: &BTreeSet<UserId>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["user"]).map_err(|e| Error::csv(path, e))?;
    for u in excluded {
        w.write_record([u.as_str()]).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_excluded(path: &Path) -> Result<BTreeSet<UserId>> {
    Ok(read_rows::<UserRow>(path)?.into_iter().map(|r| r.user).collect())
}

#[derive(Serialize, Deserialize)]
struct HubRow {
    side: Side,
    rank: usize,
    user: UserId,
    degree: u64,
}

/// `side,rank,user,degree`, ranks starting at 1.
pub fn write_hubs(path: &Path, g: &EndorsementGraph, hubs_x: &HubSet, hubs_y: &HubSet) -> Result<()> {
    let rows = [hubs_x, hubs_y].into_iter().flat_map(|h| {
        h.members.iter().enumerate().map(move |(i, u)| HubRow {
            side: h.side,
            rank: i + 1,
            user: u.clone(),
            degree: g.index_of(u.as_str()).map_or(0, |idx| g.degree(idx)),
        })
    });
    write_rows(path, rows)
}

pub fn read_hubs(path: &Path) -> Result<(HubSet, HubSet)> {
    let mut rows: Vec<HubRow> = read_rows(path)?;
    rows.sort_by_key(|r| (r.side, r.rank));
    let members = |side| rows.iter().filter(|r| r.side == side).map(|r| r.user.clone()).collect();
    let (x, y) = (
        HubSet {
            side: Side::X,
            members: members(Side::X),
        },
        HubSet {
            side: Side::Y,
            members: members(Side::Y),
        },
    );
    if x.is_empty() || y.is_empty() {
        return Err(Error::Malformed {
            path: path.to_owned(),
            line: 1,
            message: "both sides need at least one hub".into(),
        });
    }
    Ok((x, y))
}

#[derive(Serialize, Deserialize)]
struct ScoreRow {
    user: UserId,
    side: Side,
    #[serde(rename = "lX")]
    l_x: f64,
    #[serde(rename = "lY")]
    l_y: f64,
    #[serde(rename = "rhoX")]
    rho_x: f64,
    #[serde(rename = "rhoY")]
    rho_y: f64,
    rho: f64,
}

/// `user,side,lX,lY,rhoX,rhoY,rho`.
pub fn write_scores<T: Scalar>(path: &Path, pol: &Polarization<T>, sides: &SideAssignment) -> Result<()> {
    let rows = pol
        .profile
        .iter()
        .map(|(u, p)| {
            Ok(ScoreRow {
                user: u.clone(),
                side: sides
                    .side_of(u.as_str())
                    .ok_or_else(|| Error::MissingAssignment(u.to_string()))?,
                l_x: pol.times_x.get(u.as_str()).unwrap_or_default().as_f64(),
                l_y: pol.times_y.get(u.as_str()).unwrap_or_default().as_f64(),
                rho_x: p.rho_x.as_f64(),
                rho_y: p.rho_y.as_f64(),
                rho: p.rho.as_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_rows(path, rows)
}

/// Rebuilds the polarization from the stored hitting times; the percentile
/// columns are recomputed rather than trusted.
pub fn read_scores<T: Scalar>(path: &Path) -> Result<Polarization<T>> {
    let mut rows: Vec<ScoreRow> = read_rows(path)?;
    rows.sort_by(|a, b| a.user.cmp(&b.user));
    let users: Vec<UserId> = rows.iter().map(|r| r.user.clone()).collect();
    let tx = HittingTimes::from_parts(users.clone(), rows.iter().map(|r| T::of(r.l_x)).collect())?;
    let ty = HittingTimes::from_parts(users, rows.iter().map(|r| T::of(r.l_y)).collect())?;
    Polarization::new(tx, ty)
}

#[derive(Serialize, Deserialize)]
struct ItemRow {
    item: ItemId,
    rho: f64,
    #[serde(rename = "nX")]
    n_x: u64,
    #[serde(rename = "nY")]
    n_y: u64,
    #[serde(rename = "exclX")]
    excl_x: f64,
    #[serde(rename = "exclY")]
    excl_y: f64,
    popularity: u64,
}

/// `item,rho,nX,nY,exclX,exclY,popularity`.
pub fn write_items<T: Scalar>(path: &Path, items: &ItemTable<T>) -> Result<()> {
    write_rows(
        path,
        items.iter().map(|s| ItemRow {
            item: s.item.clone(),
            rho: s.rho.as_f64(),
            n_x: s.n_x,
            n_y: s.n_y,
            excl_x: s.exclusivity_x.as_f64(),
            excl_y: s.exclusivity_y.as_f64(),
            popularity: s.popularity,
        }),
    )
}

/// Sharer sets come from `shares`; shared items missing from the file are
/// reported as excluded.
pub fn read_items<T: Scalar>(path: &Path, shares: &ShareTable) -> Result<ItemTable<T>> {
    let rows: Vec<ItemRow> = read_rows(path)?;
    let mut table = ItemTable::default();
    for r in rows {
        let score = ItemScore {
            item: r.item.clone(),
            rho: T::of(r.rho),
            sharers: shares.sharers(r.item.as_str()),
            n_x: r.n_x,
            n_y: r.n_y,
            exclusivity_x: T::of(r.excl_x),
            exclusivity_y: T::of(r.excl_y),
            popularity: r.popularity,
        };
        table.scores.insert(r.item, score);
    }
    table.excluded = shares
        .items()
        .filter(|i| !table.scores.contains_key(*i))
        .cloned()
        .collect();
    Ok(table)
}

#[derive(Serialize, Deserialize)]
struct TopicRow {
    scope: String,
    key: String,
    term: String,
    weight: f64,
}

/// `scope,key,term,weight`.
pub fn write_topics<T: Scalar>(path: &Path, model: &TopicModel<T>) -> Result<()> {
    let users = model.users.iter().map(|(k, v)| ("user", k.as_str(), v));
    let items = model.items.iter().map(|(k, v)| ("item", k.as_str(), v));
    let mut rows = Vec::new();
    for (scope, key, v) in users.chain(items) {
        rows.extend(v.iter().map(|(term, w)| TopicRow {
            scope: scope.into(),
            key: key.into(),
            term: term.into(),
            weight: w.as_f64(),
        }));
    }
    write_rows(path, rows)
}

pub fn read_topics<T: Scalar>(path: &Path) -> Result<TopicModel<T>> {
    let mut model = TopicModel::default();
    for (i, r) in read_rows::<TopicRow>(path)?.into_iter().enumerate() {
        let weight = T::of(r.weight);
        match r.scope.as_str() {
            "user" => model
                .users
                .entry(r.key.into())
                .or_insert_with(TopicVector::new)
                .add(r.term, weight),
            "item" => model
                .items
                .entry(r.key.into())
                .or_insert_with(TopicVector::new)
                .add(r.term, weight),
            other => {
                return Err(Error::Malformed {
                    path: path.to_owned(),
                    line: i as u64 + 2,
                    message: format!("scope `{other}` is neither `user` nor `item`"),
                })
            }
        }
    }
    Ok(model)
}

pub fn write_factor_lists(path: &Path, lists: &[FactorLists]) -> Result<()> {
    write_json(path, lists)
}

pub fn read_factor_lists(path: &Path) -> Result<BTreeMap<UserId, FactorLists>> {
    let lists: Vec<FactorLists> = read_json(path)?;
    Ok(lists.into_iter().map(|l| (l.user.clone(), l)).collect())
}

/// `user,rank,item,phi,w1..w5,pos1..pos5`; a position is blank when the item
/// is not in that factor's list.
pub fn write_recommendations<T: Scalar>(path: &Path, recs: &[Recommendation<T>]) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record([
        "user", "rank", "item", "phi", "w1", "w2", "w3", "w4", "w5", "pos1", "pos2", "pos3", "pos4", "pos5",
    ])
    .map_err(err)?;
    for rec in recs {
        for it in &rec.items {
            let mut row = vec![
                rec.user.to_string(),
                it.rank.to_string(),
                it.item.to_string(),
                rec.phi.as_f64().to_string(),
            ];
            row.extend(rec.weights.iter().map(|w| w.as_f64().to_string()));
            row.extend(
                it.breakdown
                    .iter()
                    .map(|c| c.position.map(|p| p.to_string()).unwrap_or_default()),
            );
            w.write_record(&row).map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Summary stored as `bundle.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub id: String,
    pub name: String,
    pub users: usize,
    pub edges: usize,
    pub side_x: usize,
    pub side_y: usize,
    pub k_hubs: usize,
    /// Seeds the aggregation search for every what-if query.
    pub seed: u64,
}

/// Everything the service needs for one topic, immutable once loaded.
#[derive(Clone, Debug)]
pub struct TopicBundle<T> {
    pub manifest: BundleManifest,
    pub graph: EndorsementGraph,
    pub shares: ShareTable,
    pub sides: SideAssignment,
    pub hubs_x: HubSet,
    pub hubs_y: HubSet,
    pub polarization: Polarization<T>,
    pub items: ItemTable<T>,
    pub acceptance: AcceptanceModel<T>,
    pub layout: LayoutResult<T>,
    pub lists: BTreeMap<UserId, FactorLists>,
    pub about: Option<String>,
}

impl<T: Scalar> TopicBundle<T> {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: BundleManifest = read_json(&dir.join(files::MANIFEST))?;
        let (graph, _) = load_edges(&dir.join(files::GRAPH))?;
        let shares = load_shares(&dir.join(files::SHARES))?;
        let sides = load_assignment(&dir.join(files::SIDES), &graph)?;
        let (hubs_x, hubs_y) = read_hubs(&dir.join(files::HUBS))?;
        let polarization = read_scores(&dir.join(files::SCORES))?;
        let items = read_items(&dir.join(files::ITEMS), &shares)?;
        let acceptance = read_model(&dir.join(files::ENDORSED), &dir.join(files::EXPOSED))?;
        let layout = read_layout(&dir.join(files::LAYOUT))?;
        let lists = read_factor_lists(&dir.join(files::FACTOR_LISTS))?;
        let about_path = dir.join(files::ABOUT);
        let about = if about_path.is_file() {
            Some(std::fs::read_to_string(&about_path).map_err(|e| Error::io(&about_path, e))?)
        } else {
            None
        };
        if polarization.profile.len() != graph.len() || layout.len() != graph.len() {
            return Err(Error::Precondition(format!(
                "bundle {} is inconsistent: graph, scores and layout cover different users",
                dir.display()
            )));
        }
        Ok(TopicBundle {
            manifest,
            graph,
            shares,
            sides,
            hubs_x,
            hubs_y,
            polarization,
            items,
            acceptance,
            layout,
            lists,
            about,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_json(&dir.join(files::MANIFEST), &self.manifest)?;
        write_edges(&dir.join(files::GRAPH), &self.graph)?;
        write_shares(&dir.join(files::SHARES), &self.shares)?;
        write_assignment(&dir.join(files::SIDES), &self.sides)?;
        write_hubs(&dir.join(files::HUBS), &self.graph, &self.hubs_x, &self.hubs_y)?;
        write_scores(&dir.join(files::SCORES), &self.polarization, &self.sides)?;
        write_items(&dir.join(files::ITEMS), &self.items)?;
        write_model(&self.acceptance, &dir.join(files::ENDORSED), &dir.join(files::EXPOSED))?;
        write_layout(&dir.join(files::LAYOUT), &self.layout)?;
        let lists: Vec<FactorLists> = self.lists.values().cloned().collect();
        write_factor_lists(&dir.join(files::FACTOR_LISTS), &lists)?;
        if let Some(about) = &self.about {
            let p = dir.join(files::ABOUT);
            std::fs::write(&p, about).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }

    pub fn aggregation(&self) -> AggregationConfig {
        AggregationConfig {
            seed: self.manifest.seed,
            ..Default::default()
        }
    }
}
