//! Learn a handful of latent human collaborator types from joint-action demonstrations,
//! learn a reward per type by apprenticeship inverse reinforcement learning, and plan a
//! belief-aware robot policy over the hidden type with a point-based MOMDP solver.

pub mod domain;
pub mod error;
pub mod par;
pub mod synth;
pub mod clustering;
pub mod irl;
pub mod momdp;
pub mod pipeline;
pub mod harness;
pub mod service;

pub use error::{Error, Result};
