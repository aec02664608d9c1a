//! Reward learning from demonstrations on fixed-type MDPs.

pub mod features;
pub mod gridworld;
pub mod learn;
pub mod mdp;
pub mod projection;

pub use features::{
    empirical_feature_expectations, feature_expectations, feature_expectations_mc, stochastic_feature_expectations, FeatureKind,
    FeatureMap,
};
pub use learn::{initial_policy, irl_learn, reward_for, IrlConfig, IrlResult};
pub use mdp::{value_iteration, Mdp, MdpSolution, Policy, Reward, BELLMAN_TOLERANCE};
pub use projection::{project_onto_hull, Projection};
