//! Clustering demonstrations into human types: hard EM over transition matrices, with the
//! number of types chosen by BIC.

mod em;
mod matrix;
mod select;

pub use em::{em_cluster, ClusterModel, EmConfig, PriorMode};
pub use matrix::{sequence_loglik, TransitionMatrix};
pub use select::{
    argmax, posterior_over_types, restart_seed, select_best_model, weighted_vote, Candidate, ModelSelection,
    SelectionConfig,
};
