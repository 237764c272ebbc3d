//! Share records, CSV ingestion of edges and shares, and link normalization.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::{Error, Result};
use crate::graph::{EndorsementGraph, GraphBuilder, ItemId, UserId};

/// One tweet by `user` that contains the link `item`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareRecord {
    pub user: UserId,
    pub item: ItemId,
    pub tweet_id: String,
    pub retweet_count: u64,
    pub timestamp: i64,
}

/// All share records of a topic, indexed by item and by user.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShareTable {
    records: Vec<ShareRecord>,
    by_item: BTreeMap<ItemId, Vec<usize>>,
    by_user: BTreeMap<UserId, BTreeSet<ItemId>>,
}

impl ShareTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: impl IntoIterator<Item = ShareRecord>) -> Self {
        let mut table = ShareTable::new();
        for r in records {
            table.push(r);
        }
        table
    }

    pub fn push(&mut self, record: ShareRecord) {
        let idx = self.records.len();
        self.by_item.entry(record.item.clone()).or_default().push(idx);
        self.by_user
            .entry(record.user.clone())
            .or_default()
            .insert(record.item.clone());
        self.records.push(record);
    }

    pub fn records(&self) -> &[ShareRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = &ItemId> {
        self.by_item.keys()
    }

    pub fn records_for_item<'a>(&'a self, item: &str) -> impl Iterator<Item = &'a ShareRecord> + 'a {
        self.by_item
            .get(item)
            .into_iter()
            .flatten()
            .map(move |&i| &self.records[i])
    }

    /// Distinct users who shared the item.
    pub fn sharers(&self, item: &str) -> BTreeSet<UserId> {
        self.records_for_item(item).map(|r| r.user.clone()).collect()
    }

    /// Distinct items shared by the user.
    pub fn items_of(&self, user: &str) -> Option<&BTreeSet<ItemId>> {
        self.by_user.get(user)
    }

    pub fn has_shared(&self, user: &str, item: &str) -> bool {
        self.by_user.get(user).is_some_and(|s| s.contains(item))
    }
}

fn is_tracking_param(key: &str) -> bool {
    key.starts_with("utm_")
        || matches!(
            key,
            "fbclid" | "gclid" | "igshid" | "mc_cid" | "mc_eid" | "ref_src" | "ref_url"
        )
}

/// Canonical item id for a shared link: lowercase scheme and host, no
/// fragment, no tracking parameters. Strings that are not absolute URLs are
/// kept as trimmed opaque ids. `None` when nothing is left.
pub fn normalize_url(raw: &str) -> Option<ItemId> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    let normalized = match Url::parse(raw) {
        Ok(mut url) if url.has_host() => {
            url.set_fragment(None);
            let kept: Vec<(String, String)> = url
                .query_pairs()
                .filter(|(k, _)| !is_tracking_param(k))
                .map(|(k, v)| (k.into_owned(), v.into_owned()))
                .collect();
            if kept.is_empty() {
                url.set_query(None);
            } else {
                url.query_pairs_mut().clear().extend_pairs(kept);
            }
            url.to_string()
        }
        _ => raw.to_owned(),
    };
    Some(ItemId::new(normalized))
}

/// Copy of `shares` with every link normalized; records whose link normalizes
/// to nothing are dropped.
pub fn normalize_shares(shares: &ShareTable) -> ShareTable {
    ShareTable::from_records(
        shares
            .records()
            .iter()
            .filter_map(|r| normalize_url(r.item.as_str()).map(|item| ShareRecord { item, ..r.clone() })),
    )
}

/// Graph and shares read from disk.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub graph: EndorsementGraph,
    pub shares: ShareTable,
    pub dropped_self_loops: usize,
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))
}

fn check_header(path: &Path, headers: &csv::StringRecord, expected: &[&str], optional: usize) -> Result<()> {
    let got: Vec<&str> = headers.iter().collect();
    let required = expected.len() - optional;
    let ok = got.len() >= required && got.len() <= expected.len() && got.iter().zip(expected).all(|(g, e)| g == e);
    if ok {
        Ok(())
    } else {
        Err(Error::Malformed {
            path: path.to_owned(),
            line: 1,
            message: format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        })
    }
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Reads an edge CSV (`source,target[,count]`). A row with an empty target
/// declares an isolated vertex.
pub fn load_edges(path: &Path) -> Result<(EndorsementGraph, usize)> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    check_header(path, &headers, &["source", "target", "count"], 1)?;
    let mut builder = GraphBuilder::new();
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&rec);
        let malformed = |message: String| Error::Malformed {
            path: path.to_owned(),
            line,
            message,
        };
        if rec.len() < 2 || rec.len() > 3 {
            return Err(malformed(format!("expected 2 or 3 fields, found {}", rec.len())));
        }
        let source = &rec[0];
        let target = &rec[1];
        if source.is_empty() {
            return Err(malformed("empty source".into()));
        }
        let count = match rec.get(2) {
            None | Some("") => 1,
            Some(c) => c
                .parse::<u64>()
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| malformed(format!("count `{c}` is not a positive integer")))?,
        };
        rows += 1;
        if target.is_empty() {
            builder.add_user(source);
        } else {
            builder.add_endorsement(source, target, count);
        }
    }
    if rows == 0 {
        return Err(Error::EmptyGraph);
    }
    let dropped = builder.dropped_self_loops();
    Ok((builder.build()?, dropped))
}

/// Reads a share CSV (`user,item_url,tweet_id,retweet_count,timestamp`).
pub fn load_shares(path: &Path) -> Result<ShareTable> {
    let mut rdr = reader(path)?;
    let headers = rdr.headers().map_err(|e| Error::csv(path, e))?.clone();
    check_header(
        path,
        &headers,
        &["user", "item_url", "tweet_id", "retweet_count", "timestamp"],
        0,
    )?;
    let mut table = ShareTable::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let line = line_of(&rec);
        let malformed = |message: String| Error::Malformed {
            path: path.to_owned(),
            line,
            message,
        };
        if rec.len() != 5 {
            return Err(malformed(format!("expected 5 fields, found {}", rec.len())));
        }
        if rec[0].is_empty() {
            return Err(malformed("empty user".into()));
        }
        let item = normalize_url(&rec[1]).ok_or_else(|| malformed("empty item_url".into()))?;
        let retweet_count = rec[3]
            .parse::<u64>()
            .map_err(|_| malformed(format!("retweet_count `{}` is not a non-negative integer", &rec[3])))?;
        let timestamp = rec[4]
            .parse::<i64>()
            .map_err(|_| malformed(format!("timestamp `{}` is not an integer", &rec[4])))?;
        table.push(ShareRecord {
            user: UserId::from(&rec[0]),
            item,
            tweet_id: rec[2].to_owned(),
            retweet_count,
            timestamp,
        });
    }
    Ok(table)
}

pub fn load_dataset(edges_path: &Path, shares_path: &Path) -> Result<Dataset> {
    let (graph, dropped_self_loops) = load_edges(edges_path)?;
    let shares = load_shares(shares_path)?;
    Ok(Dataset {
        graph,
        shares,
        dropped_self_loops,
    })
}

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))
}

/// Writes `source,target,count`, one row per merged edge, isolated vertices as
/// rows with an empty target.
pub fn write_edges(path: &Path, g: &EndorsementGraph) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["source", "target", "count"]).map_err(err)?;
    for (s, t, c) in g.edges() {
        w.write_record([g.user(s).as_str(), g.user(t).as_str(), &c.to_string()])
            .map_err(err)?;
    }
    for i in 0..g.len() {
        if g.neighbors(i).is_empty() {
            w.write_record([g.user(i).as_str(), "", ""]).map_err(err)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_shares(path: &Path, shares: &ShareTable) -> Result<()> {
    let mut w = writer(path)?;
    let err = |e| Error::csv(path, e);
    w.write_record(["user", "item_url", "tweet_id", "retweet_count", "timestamp"])
        .map_err(err)?;
    for r in shares.records() {
        w.write_record([
            r.user.as_str(),
            r.item.as_str(),
            &r.tweet_id,
            &r.retweet_count.to_string(),
            &r.timestamp.to_string(),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
