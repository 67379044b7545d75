//! Runs selected requirements over one trace and reports a line each.

use std::fmt;

use super::catalog::{obligations, patterns, CheckKind, Requirement};
use super::obligation::{CompiledObligation, ObligationError, ObligationState};
use super::predicate::{format_binding, Binding, PatternError};
use super::safety::{MonitorAutomaton, MonitorState};
use crate::domain::{Action, ActionId, Alphabet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    Violated,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Ok => "ok",
            Verdict::Violated => "violated",
        })
    }
}

/// `<req-id> <ok|violated> <witness-seq|-> <binding|->`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportLine {
    pub id: &'static str,
    pub verdict: Verdict,
    pub witness: Option<u64>,
    pub binding: Option<String>,
}

impl fmt::Display for ReportLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.id, self.verdict)?;
        match self.witness {
            Some(s) => write!(f, "{s} ")?,
            None => f.write_str("- ")?,
        }
        f.write_str(self.binding.as_deref().unwrap_or("-"))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report(pub Vec<ReportLine>);

impl Report {
    pub fn all_ok(&self) -> bool {
        self.0.iter().all(|l| l.verdict == Verdict::Ok)
    }

    pub fn violated(&self) -> impl Iterator<Item = &ReportLine> {
        self.0.iter().filter(|l| l.verdict == Verdict::Violated)
    }

    pub fn get(&self, id: &str) -> Option<&ReportLine> {
        self.0.iter().find(|l| l.id == id)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error("{id}: {source}")]
    Pattern { id: &'static str, source: PatternError },
    #[error("{id}: {source}")]
    Obligation { id: &'static str, source: ObligationError },
}

#[derive(Debug, Clone)]
enum Instance {
    Pattern(MonitorAutomaton, MonitorState),
    Obligation(Binding, CompiledObligation, ObligationState),
}

impl Instance {
    fn step(&mut self, id: ActionId, seq: u64) {
        match self {
            Instance::Pattern(m, s) => *s = m.advance_id(s, id, seq),
            Instance::Obligation(_, m, s) => *s = m.advance_id(s, id, seq),
        }
    }

    /// Witness and binding text of a violation, if any.
    fn violation(&self, at_end: bool) -> Option<(u64, String)> {
        match self {
            Instance::Pattern(m, s) => s.violation.map(|v| (v.seq, m.binding_text(v.binding))),
            Instance::Obligation(b, m, s) => {
                let s = if at_end { m.finish(s) } else { *s };
                s.violation.map(|seq| (seq, format_binding(b)))
            }
        }
    }
}

/// Incremental monitor over a set of trace-checkable requirements. Graph
/// liveness requirements are skipped.
#[derive(Debug, Clone)]
pub struct TraceMonitor {
    alphabet: Alphabet,
    entries: Vec<(&'static Requirement, Vec<Instance>)>,
}

impl TraceMonitor {
    pub fn new(requirements: &[&'static Requirement], alphabet: &Alphabet) -> Result<Self, CheckError> {
        let mut entries = Vec::new();
        for &r in requirements {
            let mut inst = Vec::new();
            match r.kind {
                CheckKind::PatternMonitor => {
                    for p in patterns(r.id) {
                        let m = p
                            .compile(alphabet)
                            .map_err(|source| CheckError::Pattern { id: r.id, source })?;
                        let s = m.initial_state();
                        inst.push(Instance::Pattern(m, s));
                    }
                }
                CheckKind::ObligationMonitor => {
                    for (b, spec) in obligations(r.id, alphabet.config()) {
                        let m = spec
                            .compile(alphabet)
                            .map_err(|source| CheckError::Obligation { id: r.id, source })?;
                        let s = m.initial_state();
                        inst.push(Instance::Obligation(b, m, s));
                    }
                }
                CheckKind::GraphLiveness => continue,
            }
            entries.push((r, inst));
        }
        Ok(TraceMonitor {
            alphabet: alphabet.clone(),
            entries,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn requirements(&self) -> impl Iterator<Item = &'static Requirement> + '_ {
        self.entries.iter().map(|(r, _)| *r)
    }

    pub fn observe_id(&mut self, id: ActionId, seq: u64) {
        for (_, inst) in &mut self.entries {
            for i in inst {
                i.step(id, seq);
            }
        }
    }

    /// Actions outside the configured alphabet are ignored.
    pub fn observe(&mut self, action: &Action, seq: u64) {
        if let Ok(id) = self.alphabet.encode(action) {
            self.observe_id(id, seq);
        }
    }

    /// Report so far. With `at_end` unfinished obligations count as violated.
    pub fn report(&self, at_end: bool) -> Report {
        Report(
            self.entries
                .iter()
                .map(|(r, inst)| {
                    let first = inst
                        .iter()
                        .filter_map(|i| i.violation(at_end))
                        .min_by_key(|(seq, _)| *seq);
                    match first {
                        Some((seq, b)) => ReportLine {
                            id: r.id,
                            verdict: Verdict::Violated,
                            witness: Some(seq),
                            binding: Some(b),
                        },
                        None => ReportLine {
                            id: r.id,
                            verdict: Verdict::Ok,
                            witness: None,
                            binding: None,
                        },
                    }
                })
                .collect(),
        )
    }

    /// Ids violated so far, in catalog order.
    pub fn violated_ids(&self) -> Vec<&'static str> {
        self.report(false).violated().map(|l| l.id).collect()
    }
}

/// Checks a finished trace of `(seq, action)` pairs.
pub fn check_trace<'a>(
    requirements: &[&'static Requirement],
    alphabet: &Alphabet,
    trace: impl IntoIterator<Item = (u64, &'a Action)>,
) -> Result<Report, CheckError> {
    let mut m = TraceMonitor::new(requirements, alphabet)?;
    for (seq, a) in trace {
        m.observe(a, seq);
    }
    Ok(m.report(true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::PlantConfig;
    use crate::monitor::catalog::select;

    fn run(ids: &str, trace: &[&str]) -> Report {
        let alphabet = Alphabet::new(&PlantConfig::full());
        let actions: Vec<Action> = trace.iter().map(|t| t.parse().unwrap()).collect();
        check_trace(
            &select(ids).unwrap(),
            &alphabet,
            actions.iter().enumerate().map(|(i, a)| (i as u64, a)),
        )
        .unwrap()
    }

    #[test]
    fn empty_trace_is_fine() {
        let r = run("all", &[]);
        assert_eq!(r.0.len(), 50);
        assert!(r.all_ok());
        assert_eq!(r.0[0].to_string(), "safreq1 ok - -");
    }

    #[test]
    fn stop_without_lights() {
        let r = run(
            "commandreq3,causreq34",
            &[
                "BarrierCommand(command_stop)",
                "BarrierActuator(do_emergencyStop)",
                "BarrierCommand(command_stop)",
            ],
        );
        assert_eq!(r.get("commandreq3").unwrap().to_string(), "commandreq3 violated 0 -");
        assert_eq!(r.get("causreq34").unwrap().verdict, Verdict::Ok);
    }

    #[test]
    fn earliest_witness_wins() {
        let r = run(
            "safreq5",
            &[
                "WaterSensor(south,upstream,equal)",
                "GateActuator(north,downstream,west,do_open)",
                "GateActuator(south,upstream,west,do_open)",
                "GateActuator(north,upstream,west,do_open)",
            ],
        );
        assert_eq!(r.to_string(), "safreq5 violated 1 l=north,s=downstream\n");
    }
}
