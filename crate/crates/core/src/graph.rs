//! Endorsement graph: users, weighted "u endorsed v" edges, connectivity and hubs.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{Side, SideAssignment};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(
    /// Screen name or numeric account id.
    UserId
);
string_id!(
    /// Normalized URL of a shared link.
    ItemId
);

/// Directed, weighted endorsement graph. Vertices are kept sorted by [`UserId`],
/// so vertex indices are stable for a given vertex set.
#[derive(Clone, Debug, PartialEq)]
pub struct EndorsementGraph {
    users: Vec<UserId>,
    index: HashMap<UserId, usize>,
    edges: BTreeMap<(usize, usize), u64>,
    neighbors: Vec<Vec<(usize, u64)>>,
    out: Vec<Vec<usize>>,
    degree: Vec<u64>,
}

/// Accumulates endorsements, merging duplicates and dropping self-loops.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    users: BTreeSet<UserId>,
    edges: BTreeMap<(UserId, UserId), u64>,
    dropped_self_loops: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_user(&mut self, user: impl Into<UserId>) -> &mut Self {
        self.users.insert(user.into());
        self
    }

    /// Records `count` endorsements of `target` by `source`. Zero counts only
    /// declare the two vertices.
    pub fn add_endorsement(&mut self, source: impl Into<UserId>, target: impl Into<UserId>, count: u64) -> &mut Self {
        let (source, target) = (source.into(), target.into());
        if source == target {
            self.dropped_self_loops += 1;
            self.users.insert(source);
            return self;
        }
        self.users.insert(source.clone());
        self.users.insert(target.clone());
        if count > 0 {
            *self.edges.entry((source, target)).or_insert(0) += count;
        }
        self
    }

    pub fn dropped_self_loops(&self) -> usize {
        self.dropped_self_loops
    }

    pub fn build(self) -> Result<EndorsementGraph> {
        if self.users.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let users: Vec<UserId> = self.users.into_iter().collect();
        let index: HashMap<UserId, usize> = users.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
        let edges = self
            .edges
            .into_iter()
            .map(|((s, t), w)| ((index[&s], index[&t]), w))
            .collect();
        Ok(EndorsementGraph::from_parts(users, index, edges))
    }
}

impl EndorsementGraph {
    fn from_parts(users: Vec<UserId>, index: HashMap<UserId, usize>, edges: BTreeMap<(usize, usize), u64>) -> Self {
        let n = users.len();
        let mut undirected: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); n];
        let mut out = vec![Vec::new(); n];
        for (&(s, t), &w) in &edges {
            *undirected[s].entry(t).or_insert(0) += w;
            *undirected[t].entry(s).or_insert(0) += w;
            out[s].push(t);
        }
        let neighbors: Vec<Vec<(usize, u64)>> = undirected.into_iter().map(|m| m.into_iter().collect()).collect();
        let degree = neighbors.iter().map(|nb| nb.iter().map(|&(_, w)| w).sum()).collect();
        EndorsementGraph {
            users,
            index,
            edges,
            neighbors,
            out,
            degree,
        }
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// Vertices in ascending id order; position equals vertex index.
    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn user(&self, idx: usize) -> &UserId {
        &self.users[idx]
    }

    pub fn index_of(&self, user: &str) -> Option<usize> {
        self.index.get(user).copied()
    }

    pub fn contains(&self, user: &str) -> bool {
        self.index.contains_key(user)
    }

    pub(crate) fn require(&self, user: &str) -> Result<usize> {
        self.index_of(user).ok_or_else(|| Error::UnknownUser(user.to_owned()))
    }

    /// Directed edges `(source, target, weight)` by ascending vertex index.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.edges.iter().map(|(&(s, t), &w)| (s, t, w))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    pub fn edge_weight(&self, source: usize, target: usize) -> u64 {
        self.edges.get(&(source, target)).copied().unwrap_or(0)
    }

    /// Neighbors in the undirected sense with both directions' weights summed.
    pub fn neighbors(&self, idx: usize) -> &[(usize, u64)] {
        &self.neighbors[idx]
    }

    /// Accounts this user has endorsed.
    pub fn out_neighbors(&self, idx: usize) -> &[usize] {
        &self.out[idx]
    }

    /// Weighted in + out degree.
    pub fn degree(&self, idx: usize) -> u64 {
        self.degree[idx]
    }

    /// Induced subgraph on the given vertex indices.
    pub fn induced(&self, keep: &BTreeSet<usize>) -> EndorsementGraph {
        let users: Vec<UserId> = keep.iter().map(|&i| self.users[i].clone()).collect();
        let remap: HashMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let edges = self
            .edges
            .iter()
            .filter_map(|(&(s, t), &w)| Some(((*remap.get(&s)?, *remap.get(&t)?), w)))
            .collect();
        let index = users.iter().enumerate().map(|(i, u)| (u.clone(), i)).collect();
        EndorsementGraph::from_parts(users, index, edges)
    }

    /// Weakly connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &(w, _) in &self.neighbors[v] {
                    if !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                        queue.push_back(w);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }
}

/// Restricts the graph to its largest weakly connected component. Among
/// equally large components, the one holding the smallest [`UserId`] wins.
/// Returns the component and the users left out.
pub fn largest_connected_component(g: &EndorsementGraph) -> Result<(EndorsementGraph, BTreeSet<UserId>)> {
    if g.is_empty() {
        return Err(Error::EmptyGraph);
    }
    // components come ordered by smallest member, so strict `>` keeps the
    // lexicographically first among ties
    let mut best: Vec<usize> = Vec::new();
    for comp in g.components() {
        if comp.len() > best.len() {
            best = comp;
        }
    }
    let keep: BTreeSet<usize> = best.into_iter().collect();
    let excluded = (0..g.len())
        .filter(|i| !keep.contains(i))
        .map(|i| g.user(i).clone())
        .collect();
    Ok((g.induced(&keep), excluded))
}

/// The `k` highest-degree members of one side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubSet {
    pub side: Side,
    /// Descending weighted degree, ties by ascending id.
    pub members: Vec<UserId>,
}

impl HubSet {
    pub fn contains(&self, user: &str) -> bool {
        self.members.iter().any(|m| m.as_str() == user)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Hub sets for sides X and Y, ranked by weighted total degree.
pub fn top_k_hubs(g: &EndorsementGraph, sides: &SideAssignment, k: usize) -> Result<(HubSet, HubSet)> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let pick = |side: Side| -> Result<HubSet> {
        let mut members: Vec<usize> = Vec::new();
        for (i, user) in g.users().iter().enumerate() {
            match sides.side_of(user.as_str()) {
                Some(s) if s == side => members.push(i),
                Some(_) => {}
                None => return Err(Error::MissingAssignment(user.to_string())),
            }
        }
        if k > members.len() {
            return Err(Error::HubCountTooLarge {
                k,
                size: members.len(),
                side: side.label(),
            });
        }
        // indices ascend with UserId, so a stable sort on degree keeps id order in ties
        members.sort_by_key(|&a| std::cmp::Reverse(g.degree(a)));
        Ok(HubSet {
            side,
            members: members[..k].iter().map(|&i| g.user(i).clone()).collect(),
        })
    };
    Ok((pick(Side::X)?, pick(Side::Y)?))
}
