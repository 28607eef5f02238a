//! Inference of categorical node attributes on undirected communication graphs.
//!
//! The pipeline: load an edge list into a [`graph::Graph`], attach partial ground
//! truth as a [`labels::LabelStore`], split it into seeds and validation nodes,
//! propagate the seeds' categories as probability vectors with
//! [`diffusion::run`], collapse the vectors into decisions with
//! [`assignment`], and score them with [`evaluation`]. [`homophily`] measures
//! how strongly the graph's edges prefer same-label endpoints, and [`synth`]
//! plants that preference in random graphs for testing.

pub mod assignment;
pub mod diffusion;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod homophily;
pub mod labels;
pub mod synth;

pub use assignment::{
    argmax_assign, constrained_assign, empirical_distribution, largest_remainder, Assigned,
    Prediction, TargetDistribution,
};
pub use diffusion::{
    init_state, laplacian_residual, run, run_from, step, DiffusionParams, RunResult, StateMatrix,
};
pub use error::{Error, Result};
pub use evaluation::{
    distance_to_seeds, evaluate, hits, seeds_in_neighborhood, stratified_hits, threshold_curve,
    Bucketing, EvalReport, NodeSet,
};
pub use graph::{load_edge_list, Delimiter, Graph, LoadOptions, Node, NodeIdMap};
pub use homophily::{communication_matrix, social_effect_matrix, surrogate_matrix, MixingMatrix};
pub use labels::{bin_age, load_ground_truth, split_train_validation, AgeBinning, LabelStore, Split};
pub use synth::{generate, SynthConfig};
