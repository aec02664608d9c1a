//! End-to-end orchestration: training, type inference and episode execution.

pub mod bundle;
pub mod episode;
pub mod gaussian;
pub mod hand_finishing;

pub use bundle::{
    infer_type_offline, learn_rewards, train, type_labels, IrlReport, Manifest, TrainConfig, TrainedBundle, TypeReward,
    BUNDLE_FILES, PROTOCOL_VERSION,
};
pub use episode::{
    filter_belief, run_episode, Controller, Environment, HumanPolicy, MdpController, ModelWorld, MomdpController, Outcome, ScriptedHuman,
    TaskWorld, Transcript, Turn,
};
pub use gaussian::{build_gaussian_obs, GaussianObsModel};
pub use hand_finishing::HandFinishing;
