//! Scenario files.
//!
//! ```text
//! # comment
//! seed 7
//! operator 0.2
//! profile sensor_fail=0.001 repair=0.05
//! 3 GateCommand(north,upstream,command_open)
//! 40 fault+ sensor_fail@water(north,upstream)
//! 80 fault- sensor_fail@water(north,upstream)
//! 200 end
//! ```
//!
//! Ticks must not decrease. Events at tick `t` are applied before the plant
//! advances from `t` to `t + 1`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::plant::{Fault, FaultProfile};
use crate::domain::{Action, ActionClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioEvent {
    Command(Action),
    Fault { fault: Fault, on: bool },
}

impl fmt::Display for ScenarioEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioEvent::Command(a) => a.fmt(f),
            ScenarioEvent::Fault { fault, on: true } => write!(f, "fault+ {fault}"),
            ScenarioEvent::Fault { fault, on: false } => write!(f, "fault- {fault}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("scenario line {line}: {reason}")]
pub struct ScenarioError {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub seed: u64,
    pub profile: FaultProfile,
    /// Chance per tick that the random operator issues a console command.
    pub operator_rate: f64,
    pub events: Vec<(u64, ScenarioEvent)>,
    /// Last tick to run; events after it are never applied.
    pub end: Option<u64>,
}

impl Scenario {
    pub fn new(seed: u64) -> Self {
        Scenario {
            seed,
            profile: FaultProfile::default(),
            operator_rate: 0.0,
            events: Vec::new(),
            end: None,
        }
    }

    /// The tick a run of this scenario stops at when no step count is given.
    pub fn natural_end(&self) -> u64 {
        self.end.unwrap_or_else(|| self.events.last().map_or(0, |(t, _)| t + 1))
    }

    pub fn push(&mut self, tick: u64, event: ScenarioEvent) -> Result<(), ScenarioError> {
        if let Some(&(last, _)) = self.events.last() {
            if tick < last {
                return Err(ScenarioError {
                    line: self.events.len() + 1,
                    reason: format!("tick {tick} comes after tick {last}"),
                });
            }
        }
        if let ScenarioEvent::Command(a) = event {
            if a.kind().class() != ActionClass::Command {
                return Err(ScenarioError {
                    line: self.events.len() + 1,
                    reason: format!("`{a}` is not a console command"),
                });
            }
        }
        self.events.push((tick, event));
        Ok(())
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "seed {}", self.seed)?;
        if self.operator_rate != 0.0 {
            writeln!(f, "operator {}", self.operator_rate)?;
        }
        if self.profile != FaultProfile::default() {
            writeln!(f, "{}", profile_line(&self.profile))?;
        }
        for (t, e) in &self.events {
            writeln!(f, "{t} {e}")?;
        }
        if let Some(t) = self.end {
            writeln!(f, "{t} end")?;
        }
        Ok(())
    }
}

pub(crate) fn profile_line(p: &FaultProfile) -> String {
    format!(
        "profile sensor_fail={} stuck_aspect={} motor_stall={} repair={}",
        p.sensor_fail, p.stuck_aspect, p.motor_stall, p.repair
    )
}

fn parse_profile(rest: &str) -> Result<FaultProfile, String> {
    let mut p = FaultProfile::default();
    for item in rest.split_whitespace() {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{item}`"))?;
        let v: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
        match k {
            "sensor_fail" => p.sensor_fail = v,
            "stuck_aspect" => p.stuck_aspect = v,
            "motor_stall" => p.motor_stall = v,
            "repair" => p.repair = v,
            _ => return Err(format!("unknown profile key `{k}`")),
        }
    }
    p.validate().map_err(|e| e.to_string())?;
    Ok(p)
}

impl FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut sc = Scenario::new(0);
        let mut seen_seed = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |reason: String| ScenarioError { line, reason };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if sc.end.is_some() {
                return Err(err("nothing may follow `end`".into()));
            }
            let (head, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
            let rest = rest.trim();
            match head {
                "seed" => {
                    if seen_seed || !sc.events.is_empty() {
                        return Err(err("`seed` must come once, before any event".into()));
                    }
                    sc.seed = rest.parse().map_err(|_| err(format!("bad seed `{rest}`")))?;
                    seen_seed = true;
                }
                "operator" => {
                    let r: f64 = rest.parse().map_err(|_| err(format!("bad rate `{rest}`")))?;
                    if !(0.0..=1.0).contains(&r) {
                        return Err(err(format!("rate {r} is not a probability")));
                    }
                    sc.operator_rate = r;
                }
                "profile" => sc.profile = parse_profile(rest).map_err(err)?,
                tick => {
                    let tick: u64 = tick
                        .parse()
                        .map_err(|_| err(format!("expected a tick, got `{tick}`")))?;
                    let event = if rest == "end" {
                        if sc.events.last().is_some_and(|&(t, _)| t > tick) {
                            return Err(err("`end` comes before the last event".into()));
                        }
                        sc.end = Some(tick);
                        continue;
                    } else if let Some(f) = rest.strip_prefix("fault+") {
                        ScenarioEvent::Fault {
                            fault: f.parse().map_err(|e: super::PlantError| err(e.to_string()))?,
                            on: true,
                        }
                    } else if let Some(f) = rest.strip_prefix("fault-") {
                        ScenarioEvent::Fault {
                            fault: f.parse().map_err(|e: super::PlantError| err(e.to_string()))?,
                            on: false,
                        }
                    } else {
                        ScenarioEvent::Command(
                            rest.parse()
                                .map_err(|e: crate::domain::DomainError| err(e.to_string()))?,
                        )
                    };
                    sc.push(tick, event).map_err(|e| err(e.reason))?;
                }
            }
        }
        Ok(sc)
    }
}
