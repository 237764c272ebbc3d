//! Read-only JSON service over loaded topic bundles.
//!
//! Routes:
//! - `GET /topics`
//! - `GET /topics/{id}/graph`
//! - `GET /topics/{id}/users/{uid}?w1=..&w2=..&w3=..&w4=..&w5=..&seed=..`
//!
//! Errors come back as `{"code": .., "message": ..}`.

use std::collections::{BTreeMap, BTreeSet};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use contrarian::recommend::RecommendedItem;
use contrarian::{random_baseline, recommend, Bundle, Factor, ItemId, Real, Side, UserId, Weights};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Samples shown per user: retweets, recommendations and random items.
pub const SAMPLE_SIZE: usize = 3;

pub struct AppState {
    bundles: BTreeMap<String, Arc<Bundle>>,
    default_weights: Weights,
}

impl AppState {
    pub fn new(bundles: impl IntoIterator<Item = Bundle>, default_weights: Weights) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for b in bundles {
            let id = b.manifest.id.clone();
            if map.insert(id.clone(), Arc::new(b)).is_some() {
                return Err(format!("two bundles share the topic id `{id}`"));
            }
        }
        Ok(AppState {
            bundles: map,
            default_weights,
        })
    }

    pub fn load(dirs: &[impl AsRef<Path>], default_weights: Weights) -> Result<Self, String> {
        let bundles = dirs
            .iter()
            .map(|d| Bundle::load(d.as_ref()).map_err(|e| format!("{}: {e}", d.as_ref().display())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bundles, default_weights)
    }

    fn bundle(&self, id: &str) -> Result<&Arc<Bundle>, ApiError> {
        self.bundles
            .get(id)
            .ok_or_else(|| ApiError::not_found(format!("unknown topic `{id}`")))
    }
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn not_found(message: String) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message,
        }
    }

    fn bad_request(message: String) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message,
        }
    }

    fn internal(message: String) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct TopicSummary {
    pub id: String,
    pub name: String,
    pub users: usize,
    pub edges: usize,
    pub side_x: usize,
    pub side_y: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphNode {
    pub user: UserId,
    pub x: f64,
    pub y: f64,
    pub side: Side,
    pub rho: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphEdge {
    pub source: UserId,
    pub target: UserId,
    pub weight: u64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphPayload {
    pub topic: String,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct Retweet {
    pub tweet_id: String,
    pub author: UserId,
    pub item: ItemId,
    pub retweet_count: u64,
    pub timestamp: i64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct FactorShare {
    pub factor: Factor,
    pub weight: f64,
    pub position: Option<usize>,
    pub contribution: f64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct RecommendationEntry {
    pub rank: usize,
    pub item: ItemId,
    pub rho: f64,
    pub breakdown: Vec<FactorShare>,
    pub sharers: Vec<UserId>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct UserDetail {
    pub topic: String,
    pub user: UserId,
    pub side: Side,
    pub rho: f64,
    pub profile_url: String,
    pub retweets: Vec<Retweet>,
    pub recommendations: Vec<RecommendationEntry>,
    pub phi: Option<f64>,
    pub weights: [f64; 5],
    pub short_pool: bool,
    pub random: Vec<ItemId>,
    pub seed: u64,
}

#[derive(Debug, Default, Deserialize)]
pub struct DetailQuery {
    pub w1: Option<f64>,
    pub w2: Option<f64>,
    pub w3: Option<f64>,
    pub w4: Option<f64>,
    pub w5: Option<f64>,
    pub seed: Option<u64>,
}

impl DetailQuery {
    /// `None` when no weight was given; otherwise unspecified weights are 0.
    fn weights(&self) -> Result<Option<Weights>, ApiError> {
        let raw = [self.w1, self.w2, self.w3, self.w4, self.w5];
        if raw.iter().all(Option::is_none) {
            return Ok(None);
        }
        Weights::new(raw.map(|w| w.unwrap_or(0.0)))
            .map(Some)
            .map_err(|e| ApiError::bad_request(e.to_string()))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/topics", get(topic_index))
        .route("/topics/{id}/graph", get(topic_graph))
        .route("/topics/{id}/users/{uid}", get(user_detail))
        .fallback(|| async { ApiError::not_found("no such route".into()) })
        .with_state(state)
}

pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

async fn topic_index(State(state): State<Arc<AppState>>) -> Json<Vec<TopicSummary>> {
    Json(state.bundles.values().map(|b| summarize(b)).collect())
}

pub fn summarize(b: &Bundle) -> TopicSummary {
    TopicSummary {
        id: b.manifest.id.clone(),
        name: b.manifest.name.clone(),
        users: b.graph.len(),
        edges: b.graph.edge_count(),
        side_x: b.sides.size(Side::X),
        side_y: b.sides.size(Side::Y),
    }
}

async fn topic_graph(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<GraphPayload>, ApiError> {
    let b = state.bundle(&id)?;
    Ok(Json(graph_payload(b)))
}

pub fn graph_payload(b: &Bundle) -> GraphPayload {
    let g = &b.graph;
    let nodes = g
        .users()
        .iter()
        .map(|u| {
            let [x, y] = b.layout.get(u.as_str()).unwrap_or([0.5, 0.5]);
            GraphNode {
                user: u.clone(),
                x,
                y,
                side: b.sides.side_of(u.as_str()).unwrap_or(Side::X),
                rho: b.polarization.profile.rho(u.as_str()).unwrap_or(0.0),
            }
        })
        .collect();
    let edges = g
        .edges()
        .map(|(s, t, w)| GraphEdge {
            source: g.user(s).clone(),
            target: g.user(t).clone(),
            weight: w,
        })
        .collect();
    GraphPayload {
        topic: b.manifest.id.clone(),
        nodes,
        edges,
    }
}

async fn user_detail(
    State(state): State<Arc<AppState>>,
    UrlPath((id, uid)): UrlPath<(String, String)>,
    query: Result<Query<DetailQuery>, QueryRejection>,
) -> Result<Json<UserDetail>, ApiError> {
    let Query(query) = query.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let bundle = Arc::clone(state.bundle(&id)?);
    let weights = query.weights()?.unwrap_or_else(|| state.default_weights);
    let seed = query.seed.unwrap_or(0);
    // aggregation search is CPU-bound
    let detail = tokio::task::spawn_blocking(move || user_detail_payload(&bundle, &uid, &weights, seed))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(detail))
}

/// Detail pane for one user. Recommendations depend on the weights and the
/// bundle's aggregation seed; `seed` only drives the retweet and random
/// samples.
pub fn user_detail_payload(b: &Bundle, user: &str, weights: &Weights, seed: u64) -> Result<UserDetail, ApiError> {
    let g = &b.graph;
    let idx = g
        .index_of(user)
        .ok_or_else(|| ApiError::not_found(format!("unknown user `{user}` in topic `{}`", b.manifest.id)))?;
    let profile = b
        .polarization
        .profile
        .get(user)
        .ok_or_else(|| ApiError::internal(format!("user `{user}` has no score")))?;
    let side = b
        .sides
        .side_of(user)
        .ok_or_else(|| ApiError::internal(format!("user `{user}` has no side")))?;

    let (recommendations, phi, short_pool, random) = match b.lists.get(user) {
        Some(lists) => {
            let rec = recommend(lists, weights, SAMPLE_SIZE, &b.aggregation(), &b.shares)
                .map_err(|e| ApiError::internal(e.to_string()))?;
            let chosen: BTreeSet<ItemId> = rec.items.iter().map(|r| r.item.clone()).collect();
            let random = random_baseline(lists.pool(), &chosen, SAMPLE_SIZE, seed).unwrap_or_default();
            let entries = rec.items.iter().map(|r| entry(b, r)).collect();
            (entries, Some(rec.phi), rec.short_pool, random)
        }
        None => (Vec::new(), None, true, Vec::new()),
    };

    Ok(UserDetail {
        topic: b.manifest.id.clone(),
        user: UserId::from(user),
        side,
        rho: profile.rho,
        profile_url: format!("https://twitter.com/{user}"),
        retweets: sample_retweets(b, idx, seed),
        recommendations,
        phi,
        weights: weights.as_array(),
        short_pool,
        random,
        seed,
    })
}

fn entry(b: &Bundle, r: &RecommendedItem<Real>) -> RecommendationEntry {
    RecommendationEntry {
        rank: r.rank,
        item: r.item.clone(),
        rho: b.items.get(r.item.as_str()).map_or(0.0, |s| s.rho),
        breakdown: r
            .breakdown
            .iter()
            .map(|c| FactorShare {
                factor: c.factor,
                weight: c.weight,
                position: c.position,
                contribution: c.contribution,
            })
            .collect(),
        sharers: r.sharers.clone(),
    }
}

/// Up to three shares by accounts the user endorsed, standing in for the
/// user's own retweets.
fn sample_retweets(b: &Bundle, idx: usize, seed: u64) -> Vec<Retweet> {
    let g = &b.graph;
    let endorsed: BTreeSet<&str> = g.out_neighbors(idx).iter().map(|&j| g.user(j).as_str()).collect();
    let candidates: Vec<_> = b
        .shares
        .records()
        .iter()
        .filter(|r| endorsed.contains(r.user.as_str()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = rand::seq::index::sample(&mut rng, candidates.len(), SAMPLE_SIZE.min(candidates.len())).into_vec();
    picks.sort_unstable();
    picks
        .into_iter()
        .map(|i| {
            let r = candidates[i];
            Retweet {
                tweet_id: r.tweet_id.clone(),
                author: r.user.clone(),
                item: r.item.clone(),
                retweet_count: r.retweet_count,
                timestamp: r.timestamp,
            }
        })
        .collect()
}
