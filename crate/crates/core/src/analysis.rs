//! The whole scoring pipeline in memory, from a raw graph and share table to
//! per-user factor lists.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::acceptance::{fit_acceptance_model, AcceptanceConfig, AcceptanceModel};
use crate::dataset::{normalize_shares, ShareTable};
use crate::error::{Error, Result};
use crate::graph::{largest_connected_component, top_k_hubs, EndorsementGraph, HubSet, UserId};
use crate::items::{compute_item_scores, ItemTable};
use crate::partition::{partition, SideAssignment, SpectralConfig};
use crate::polarimeter::{Polarization, SolverConfig};
use crate::recommend::{build_candidate_pool, build_factor_lists, FactorLists, RecommendContext};
use crate::scalar::Scalar;
use crate::topics::{build_topic_model, Annotations, TextCorpus, TopicExtractor, TopicModel};

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub k_hubs: usize,
    pub spectral: SpectralConfig,
    pub solver: SolverConfig,
    pub acceptance: AcceptanceConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            k_hubs: 10,
            spectral: SpectralConfig::default(),
            solver: SolverConfig::default(),
            acceptance: AcceptanceConfig::default(),
        }
    }
}

/// Every per-topic artifact short of recommendations.
#[derive(Clone, Debug)]
pub struct TopicAnalysis<T> {
    /// Largest connected component; the scored users.
    pub graph: EndorsementGraph,
    pub excluded: BTreeSet<UserId>,
    pub shares: ShareTable,
    pub sides: SideAssignment,
    pub hubs_x: HubSet,
    pub hubs_y: HubSet,
    pub polarization: Polarization<T>,
    pub items: ItemTable<T>,
    pub acceptance: AcceptanceModel<T>,
    pub topics: TopicModel<T>,
}

/// Runs component extraction, partitioning (unless `sides` is given), hub
/// selection, hitting times, item scores, the acceptance fit and topics.
pub fn analyze<T: Scalar>(
    graph: &EndorsementGraph,
    shares: &ShareTable,
    texts: &TextCorpus,
    annotations: Option<&Annotations>,
    extractor: &dyn TopicExtractor,
    sides: Option<&SideAssignment>,
    cfg: &AnalysisConfig,
) -> Result<TopicAnalysis<T>> {
    let (graph, excluded) = largest_connected_component(graph)?;
    let shares = normalize_shares(shares);
    let sides = match sides {
        Some(s) => SideAssignment::from_pairs(
            graph
                .users()
                .iter()
                .map(|u| {
                    s.side_of(u.as_str())
                        .map(|side| (u.clone(), side))
                        .ok_or_else(|| Error::MissingAssignment(u.to_string()))
                })
                .collect::<Result<Vec<_>>>()?,
        )?,
        None => partition::<T>(&graph, &cfg.spectral)?,
    };
    let (hubs_x, hubs_y) = top_k_hubs(&graph, &sides, cfg.k_hubs)?;
    let polarization = Polarization::compute(&graph, &hubs_x, &hubs_y, &cfg.solver)?;
    let items = compute_item_scores(&shares, &polarization.profile, &sides);
    let acceptance = fit_acceptance_model(&graph, &shares, &polarization.profile, &items, &cfg.acceptance)?;
    let topics = build_topic_model(texts, &shares, annotations, extractor);
    Ok(TopicAnalysis {
        graph,
        excluded,
        shares,
        sides,
        hubs_x,
        hubs_y,
        polarization,
        items,
        acceptance,
        topics,
    })
}

impl<T: Scalar> TopicAnalysis<T> {
    pub fn context(&self) -> RecommendContext<'_, T> {
        RecommendContext {
            graph: &self.graph,
            sides: &self.sides,
            hubs_x: &self.hubs_x,
            hubs_y: &self.hubs_y,
            polarization: &self.polarization,
            items: &self.items,
            acceptance: &self.acceptance,
            topics: &self.topics,
            shares: &self.shares,
        }
    }

    pub fn factor_lists(&self, user: &str) -> Result<FactorLists> {
        let pool = build_candidate_pool(user, &self.shares, &self.items)?;
        build_factor_lists(&self.context(), user, &pool)
    }

    /// Factor lists for every scored user with a non-empty pool, in user order.
    pub fn all_factor_lists(&self) -> Result<Vec<FactorLists>> {
        let lists: Vec<Option<FactorLists>> = self
            .graph
            .users()
            .par_iter()
            .map(|u| match self.factor_lists(u.as_str()) {
                Ok(l) => Ok(Some(l)),
                Err(Error::NothingToRecommend(_)) => Ok(None),
                Err(e) => Err(e),
            })
            .collect::<Result<_>>()?;
        Ok(lists.into_iter().flatten().collect())
    }
}
