//! Mixed-observability model over (task-step, hidden type), Bayes filtering of the type,
//! and a point-based solver.

pub mod assemble;
pub mod model;
pub mod solver;

pub use assemble::{assemble_momdp, fixed_type_mdp, response_model, ResponseSource, RewardSpec};
pub use model::{
    belief_update, belief_update_with, propagate, validate_belief, Belief, Branch, ConditionedRow, Kernel, Momdp,
    ObservationModel, TypeDynamics, TypeRow, DISTRIBUTION_TOLERANCE,
};
pub use solver::{best_action, solve_point_based, AlphaVector, PbviConfig, PolicyValue};
