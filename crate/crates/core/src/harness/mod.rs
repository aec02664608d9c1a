//! The evaluation protocol: leave-one-subject-out folds, deviating simulated workers, a
//! per-user baseline and accumulated-reward summaries.

pub mod folds;
pub mod robustness;
pub mod scoring;

pub use folds::{baseline_per_user_mdp, classification_accuracy, cross_validate, BaselinePolicy, Fold};
pub use robustness::{
    emit_plot_data, evaluate_robustness, Episode, EpsilonHuman, RobustnessConfig, RobustnessReport, Summary,
    BASELINE_POLICY, MOMDP_POLICY,
};
pub use scoring::score;
