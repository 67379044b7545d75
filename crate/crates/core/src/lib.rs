//! Controller, trace monitors, explicit-state checker and plant simulator for
//! a two-lock complex with a flood barrier.

pub mod checker;
pub mod config;
pub mod controller;
pub mod domain;
pub mod monitor;
pub mod sim;
pub mod trace;

pub use controller::{Controller, ControllerParams, ControllerState, Mode, Mutation, Position};
pub use domain::{Action, ActionKind, Alphabet, PlantConfig};
