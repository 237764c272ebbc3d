//! Polarization scoring and contrarian content recommendation over
//! endorsement (retweet) graphs.
//!
//! The pipeline: load a graph and share table, keep the largest connected
//! component, split it into two sides, score every user by random-walk
//! hitting times to each side's hubs, score items, fit an acceptance model,
//! build five factor lists per user and aggregate them by weighted top-k
//! footrule distance.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod acceptance;
pub mod analysis;
pub mod artifacts;
pub mod dataset;
pub mod error;
pub mod graph;
pub mod items;
pub mod layout;
pub mod partition;
pub mod polarimeter;
pub mod recommend;
pub mod scalar;
pub mod synth;
pub mod topics;

pub use acceptance::{fit_acceptance_model, AcceptanceConfig, AcceptanceModel};
pub use analysis::{analyze, AnalysisConfig, TopicAnalysis};
pub use artifacts::{BundleManifest, TopicBundle};
pub use dataset::{load_dataset, normalize_url, Dataset, ShareRecord, ShareTable};
pub use error::{Error, Result};
pub use graph::{largest_connected_component, top_k_hubs, EndorsementGraph, GraphBuilder, HubSet, ItemId, UserId};
pub use items::{compute_item_scores, ItemScore, ItemTable};
pub use layout::{compute_layout, LayoutConfig, LayoutResult};
pub use partition::{partition, Side, SideAssignment, SpectralConfig};
pub use polarimeter::{
    delta_polarization, expected_hitting_times, user_polarization, HittingTimes, Polarization, PolarizationProfile,
    SolverConfig,
};
pub use recommend::{
    aggregate_rankings, footrule_distance, random_baseline, recommend, AggregationConfig, Factor, FactorLists,
    FactorWeights, RankedList, Recommendation,
};
pub use scalar::Scalar;
pub use synth::{synth_dataset, synth_polarized_graph, SynthConfig, SynthDataset};
pub use topics::{RuleBasedExtractor, TopicExtractor, TopicModel, TopicVector};

/// Default scalar.
pub type Real = f64;
pub type Profile = PolarizationProfile<Real>;
pub type Times = HittingTimes<Real>;
pub type Items = ItemTable<Real>;
pub type Acceptance = AcceptanceModel<Real>;
pub type Weights = FactorWeights<Real>;
pub type Layout = LayoutResult<Real>;
pub type Analysis = TopicAnalysis<Real>;
pub type Bundle = TopicBundle<Real>;
