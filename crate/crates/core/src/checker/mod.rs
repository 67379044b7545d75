//! Explicit-state verification of the controller on reduced plants.

pub mod bound;
pub mod explore;
pub mod inevitability;
pub mod liveness;
pub mod pack;
pub mod safety;
pub mod verify;

use thiserror::Error;

pub use bound::state_bound;
pub use explore::{random_walk, ExploreError, ExploreMode, GraphStats, Limits, StateGraph};
pub use inevitability::{check_inevitability, InevitabilityVerdict};
pub use liveness::{check_liveness, LivenessSpec, LivenessVerdict};
pub use safety::{check_safety_product, Counterexample, SafetyVerdict};
pub use verify::{verify, verify_all, GraphVerdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckerError {
    #[error("the graph was not explored exhaustively")]
    NotExhaustive,
    #[error("read `{0}` is neither universal nor essential")]
    UncoveredRead(String),
    #[error("`{0}` is both universal and essential")]
    OverlappingClasses(String),
    #[error("{0} essential sensor inputs, at most 64 are supported")]
    TooManyEssential(usize),
    #[error("{0}")]
    Monitor(String),
}
