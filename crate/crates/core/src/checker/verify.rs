//! Runs catalog requirements against an explored graph.

use super::explore::StateGraph;
use super::inevitability::check_inevitability_within;
use super::liveness::{barrier_can_close, check_liveness_within, gates_can_close, ship_can_pass, LivenessSpec};
use super::safety::check_safety_within;
use super::CheckerError;
use crate::domain::Action;
use crate::monitor::catalog::{obligations, patterns, CheckKind, Requirement};
use crate::monitor::check::{ReportLine, Verdict};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphVerdict {
    pub id: &'static str,
    pub holds: bool,
    /// Position of the offending action in `path`.
    pub witness: Option<u64>,
    pub binding: Option<String>,
    /// A violating trace, or for liveness a path to a losing state.
    pub path: Option<Vec<Action>>,
}

impl GraphVerdict {
    pub fn report_line(&self) -> ReportLine {
        ReportLine {
            id: self.id,
            verdict: if self.holds { Verdict::Ok } else { Verdict::Violated },
            witness: self.witness,
            binding: self.binding.clone(),
        }
    }
}

/// The graph specs behind a liveness requirement, one per binding.
pub fn liveness_specs(id: &str, config: &crate::domain::PlantConfig) -> Vec<(String, LivenessSpec)> {
    match id {
        "livereq1" if config.include_barrier() => vec![("-".to_string(), barrier_can_close())],
        "livereq2" => config
            .lock_sides()
            .map(|(l, s)| (format!("l={l},s={s}"), gates_can_close(l, s)))
            .collect(),
        "livereq3" => config
            .lock_sides()
            .map(|(l, s)| (format!("l={l},s={s}"), ship_can_pass(l, s)))
            .collect(),
        _ => Vec::new(),
    }
}

/// Checks one requirement; the graph must be exhaustive.
pub fn verify(g: &StateGraph, r: &'static Requirement) -> Result<GraphVerdict, CheckerError> {
    if !g.is_exhaustive() {
        return Err(CheckerError::NotExhaustive);
    }
    verify_partial(g, r)
}

/// Checks one requirement on whatever part of the graph was explored.
/// Liveness on a partial graph fails at its unexpanded frontier.
pub fn verify_partial(g: &StateGraph, r: &'static Requirement) -> Result<GraphVerdict, CheckerError> {
    let ok = GraphVerdict {
        id: r.id,
        holds: true,
        witness: None,
        binding: None,
        path: None,
    };
    let mut best: Option<GraphVerdict> = None;
    let mut consider = |v: GraphVerdict| {
        if best
            .as_ref()
            .is_none_or(|b| b.path.as_ref().map(Vec::len) > v.path.as_ref().map(Vec::len))
        {
            best = Some(v);
        }
    };
    match r.kind {
        CheckKind::PatternMonitor => {
            for p in patterns(r.id) {
                let m = p
                    .compile(g.alphabet())
                    .map_err(|e| CheckerError::Monitor(e.to_string()))?;
                if let Some(c) = check_safety_within(g, &m).counterexample {
                    consider(GraphVerdict {
                        id: r.id,
                        holds: false,
                        witness: Some(c.witness),
                        binding: Some(c.binding),
                        path: Some(c.actions),
                    });
                }
            }
        }
        CheckKind::ObligationMonitor => {
            for (b, spec) in obligations(r.id, g.config()) {
                let ob = spec
                    .compile(g.alphabet())
                    .map_err(|e| CheckerError::Monitor(e.to_string()))?;
                if let Some(c) = check_inevitability_within(g, &ob, &b).counterexample {
                    consider(GraphVerdict {
                        id: r.id,
                        holds: false,
                        witness: Some(c.witness),
                        binding: Some(c.binding),
                        path: Some(c.actions),
                    });
                }
            }
        }
        CheckKind::GraphLiveness => {
            for (binding, spec) in liveness_specs(r.id, g.config()) {
                let v = check_liveness_within(g, &spec)?;
                if let Some(path) = v.losing_path {
                    consider(GraphVerdict {
                        id: r.id,
                        holds: false,
                        witness: None,
                        binding: Some(binding),
                        path: Some(path),
                    });
                }
            }
        }
    }
    Ok(best.unwrap_or(ok))
}

/// Checks each requirement in order.
pub fn verify_all(g: &StateGraph, reqs: &[&'static Requirement]) -> Result<Vec<GraphVerdict>, CheckerError> {
    reqs.iter().map(|r| verify(g, r)).collect()
}
