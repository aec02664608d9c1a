//! Domain vocabulary and the on-disk formats shared by every other module.

mod alphabet;
mod demo;
pub mod place_drill;
mod task;

pub use alphabet::{ActionAlphabet, ActionRecord, Actor};
pub use demo::{group_by_subject, load_demonstrations, save_demonstrations, DemoSequence, DemoSet};
pub use task::{
    validate_domain, IdleActions, ReplayTurn, ResponseOutcome, ResponseRow, TaskDomain, Violation,
    LOAD_TOLERANCE, ROW_TOLERANCE,
};
