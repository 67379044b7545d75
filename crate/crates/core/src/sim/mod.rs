//! Closed-loop simulation of the controller against a plant model.

pub mod plant;
pub mod scenario;
pub mod session;

pub use plant::{Aspect, Device, Fault, FaultKind, FaultProfile, Motion, Plant, PlantError, PlantSummary, Target};
pub use scenario::{Scenario, ScenarioError, ScenarioEvent};
pub use session::{monitor_for, replay, Recorder, Session, SimError, SimStats};
