//! Requirement catalog and trace monitors.

pub mod catalog;
pub mod check;
pub mod obligation;
pub mod predicate;
pub mod safety;

pub use catalog::{catalog, find, select, Category, CheckKind, Requirement};
pub use check::{check_trace, Report, ReportLine, TraceMonitor, Verdict};
pub use predicate::{ActionPredicate, Binding, PatternError, PredicateSet};
pub use safety::{MonitorAutomaton, MonitorState, SafetyPattern};
