//! The controller driving the plant.
//!
//! Per tick: scripted events for the current tick, then at most one random
//! console command, then the plant advances and its sensor reports are fed
//! to the controller one burst at a time. Every burst's outputs reach the
//! plant before the next input.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use super::plant::{Fault, FaultProfile, Plant, PlantError};
use super::scenario::{profile_line, Scenario, ScenarioEvent};
use crate::controller::{Controller, ControllerError, ControllerParams};
use crate::domain::{Action, ActionClass, Alphabet, PlantConfig};
use crate::monitor::{Report, ReportLine, TraceMonitor};
use crate::trace::{EventKind, TraceEvent};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error("`{0}` is not a console command")]
    NotACommand(String),
    #[error("`{0}` addresses a device outside the configuration")]
    OutsideConfig(String),
    #[error("recording failed: {0}")]
    Io(#[from] io::Error),
}

/// Running totals for the stats line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SimStats {
    pub ticks: u64,
    pub events: u64,
    pub inputs: u64,
    pub reads: u64,
    pub outputs: u64,
    pub commands: u64,
    pub fault_toggles: u64,
    /// Ticks at which a gate and the opposite side of its lock were both open.
    pub interlock_breaches: u64,
}

impl std::fmt::Display for SimStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ticks={} events={} inputs={} reads={} outputs={} commands={} fault_toggles={} interlock_breaches={}",
            self.ticks,
            self.events,
            self.inputs,
            self.reads,
            self.outputs,
            self.commands,
            self.fault_toggles,
            self.interlock_breaches
        )
    }
}

/// Trace and scenario sinks, flushed after every record.
pub struct Recorder {
    trace: Box<dyn Write + Send>,
    scenario: Box<dyn Write + Send>,
}

impl Recorder {
    pub fn new(trace: impl Write + Send + 'static, scenario: impl Write + Send + 'static) -> Self {
        Recorder {
            trace: Box::new(trace),
            scenario: Box::new(scenario),
        }
    }
}

impl std::fmt::Debug for Recorder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Recorder")
    }
}

#[derive(Debug)]
pub struct Session {
    controller: Controller,
    params: ControllerParams,
    plant: Plant,
    seed: u64,
    profile: FaultProfile,
    operator_rate: f64,
    operator: ChaCha8Rng,
    commands: Vec<Action>,
    seq: u64,
    stats: SimStats,
    monitor: Option<TraceMonitor>,
    reported: Vec<&'static str>,
    keep_trace: bool,
    trace: Vec<TraceEvent>,
    recorder: Option<Recorder>,
    record_error: Option<io::Error>,
}

impl Session {
    pub fn new(config: &PlantConfig, profile: FaultProfile, seed: u64) -> Result<Self, SimError> {
        Self::with_controller(Controller::new(config), profile, seed)
    }

    pub fn with_controller(controller: Controller, profile: FaultProfile, seed: u64) -> Result<Self, SimError> {
        let plant = Plant::new(controller.config(), profile, seed)?;
        let mut operator = ChaCha8Rng::seed_from_u64(seed);
        operator.set_stream(1);
        let commands = controller
            .stable_inputs()
            .iter()
            .copied()
            .filter(|a| a.kind().class() == ActionClass::Command)
            .collect();
        Ok(Session {
            params: controller.initial_state().params,
            controller,
            plant,
            seed,
            profile,
            operator_rate: 0.0,
            operator,
            commands,
            seq: 0,
            stats: SimStats::default(),
            monitor: None,
            reported: Vec::new(),
            keep_trace: false,
            trace: Vec::new(),
            recorder: None,
            record_error: None,
        })
    }

    /// A session set up as the scenario's header says.
    pub fn for_scenario(controller: Controller, sc: &Scenario) -> Result<Self, SimError> {
        let mut s = Self::with_controller(controller, sc.profile, sc.seed)?;
        s.operator_rate = sc.operator_rate;
        Ok(s)
    }

    pub fn set_operator_rate(&mut self, rate: f64) {
        self.operator_rate = rate.clamp(0.0, 1.0);
    }

    pub fn attach_monitor(&mut self, monitor: TraceMonitor) {
        self.monitor = Some(monitor);
    }

    /// Keep every trace event in memory.
    pub fn keep_trace(&mut self, on: bool) {
        self.keep_trace = on;
    }

    /// Starts recording; writes the scenario header right away.
    pub fn record(&mut self, mut recorder: Recorder) -> Result<(), SimError> {
        // Random commands are written out one by one, so the header leaves
        // the operator rate out.
        writeln!(recorder.scenario, "seed {}", self.seed)?;
        if self.profile != FaultProfile::default() {
            writeln!(recorder.scenario, "{}", profile_line(&self.profile))?;
        }
        recorder.scenario.flush()?;
        self.recorder = Some(recorder);
        Ok(())
    }

    /// Writes the `end` line and drops the recorder.
    pub fn finish_recording(&mut self) -> Result<(), SimError> {
        if let Some(mut r) = self.recorder.take() {
            writeln!(r.scenario, "{} end", self.plant.tick_count())?;
            r.scenario.flush()?;
            r.trace.flush()?;
        }
        Ok(())
    }

    pub fn controller(&self) -> &Controller {
        &self.controller
    }

    pub fn config(&self) -> &PlantConfig {
        self.controller.config()
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn plant(&self) -> &Plant {
        &self.plant
    }

    pub fn tick_count(&self) -> u64 {
        self.plant.tick_count()
    }

    pub fn stats(&self) -> SimStats {
        self.stats
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    pub fn monitor(&self) -> Option<&TraceMonitor> {
        self.monitor.as_ref()
    }

    pub fn report(&self, at_end: bool) -> Option<Report> {
        self.monitor.as_ref().map(|m| m.report(at_end))
    }

    /// Violations that appeared since the last call.
    pub fn new_violations(&mut self) -> Vec<ReportLine> {
        let Some(m) = &self.monitor else {
            return Vec::new();
        };
        let fresh: Vec<ReportLine> = m
            .report(false)
            .0
            .into_iter()
            .filter(|l| l.verdict == crate::monitor::Verdict::Violated && !self.reported.contains(&l.id))
            .collect();
        self.reported.extend(fresh.iter().map(|l| l.id));
        fresh
    }

    /// A write failure stops the recording but not the session; the error is
    /// kept for [`Session::take_record_error`].
    fn write_record(&mut self, f: impl FnOnce(&mut Recorder) -> io::Result<()>) {
        if let Some(r) = &mut self.recorder {
            if let Err(e) = f(r) {
                self.recorder = None;
                self.record_error = Some(e);
            }
        }
    }

    pub fn is_recording(&self) -> bool {
        self.recorder.is_some()
    }

    pub fn take_record_error(&mut self) -> Option<io::Error> {
        self.record_error.take()
    }

    fn scenario_line(&mut self, event: &ScenarioEvent) {
        let tick = self.plant.tick_count();
        self.write_record(|r| {
            writeln!(r.scenario, "{tick} {event}")?;
            r.scenario.flush()
        });
    }

    fn emit(&mut self, kind: EventKind, action: Action, out: &mut Vec<TraceEvent>) {
        let ev = TraceEvent {
            seq: self.seq,
            kind,
            action,
        };
        self.seq += 1;
        self.stats.events += 1;
        match kind {
            EventKind::Input => self.stats.inputs += 1,
            EventKind::Read => self.stats.reads += 1,
            EventKind::Output => self.stats.outputs += 1,
        }
        if let Some(m) = &mut self.monitor {
            m.observe(&action, ev.seq);
        }
        self.write_record(|r| {
            writeln!(r.trace, "{ev}")?;
            r.trace.flush()
        });
        if self.keep_trace {
            self.trace.push(ev);
        }
        out.push(ev);
    }

    /// One input burst with the plant answering reads and receiving outputs.
    fn burst(&mut self, input: Action, out: &mut Vec<TraceEvent>) -> Result<(), SimError> {
        let plant = &self.plant;
        let burst = self
            .controller
            .run_burst(&self.params, &input, |slot| plant.respond(slot))?;
        self.params = burst.params;
        for (kind, a) in burst.actions(input) {
            self.emit(kind, a, out);
        }
        for a in &burst.outputs {
            self.plant.apply(a)?;
        }
        Ok(())
    }

    /// Issues a console command now.
    pub fn command(&mut self, action: Action) -> Result<Vec<TraceEvent>, SimError> {
        if action.kind().class() != ActionClass::Command {
            return Err(SimError::NotACommand(action.to_string()));
        }
        if !action.fits(self.config()) {
            return Err(SimError::OutsideConfig(action.to_string()));
        }
        self.scenario_line(&ScenarioEvent::Command(action));
        self.stats.commands += 1;
        let mut out = Vec::new();
        self.burst(action, &mut out)?;
        Ok(out)
    }

    pub fn fault(&mut self, fault: Fault, on: bool) -> Result<(), SimError> {
        self.plant.inject_fault(fault, on)?;
        self.stats.fault_toggles += 1;
        self.scenario_line(&ScenarioEvent::Fault { fault, on });
        Ok(())
    }

    pub fn apply_event(&mut self, event: ScenarioEvent) -> Result<Vec<TraceEvent>, SimError> {
        match event {
            ScenarioEvent::Command(a) => self.command(a),
            ScenarioEvent::Fault { fault, on } => self.fault(fault, on).map(|()| Vec::new()),
        }
    }

    /// The random operator's move followed by one plant tick.
    pub fn tick(&mut self) -> Result<Vec<TraceEvent>, SimError> {
        let mut out = Vec::new();
        if self.operator_rate > 0.0 && !self.commands.is_empty() && self.operator.random_bool(self.operator_rate) {
            let a = self.commands[self.operator.random_range(0..self.commands.len())];
            out.extend(self.command(a)?);
        }
        let sensed = self.plant.tick();
        self.stats.ticks += 1;
        for a in sensed {
            self.burst(a, &mut out)?;
        }
        if self.plant.interlock_breach().is_some() {
            self.stats.interlock_breaches += 1;
        }
        Ok(out)
    }

    /// Runs a scenario for `ticks` ticks (its natural end if `None`).
    pub fn run_scenario(&mut self, sc: &Scenario, ticks: Option<u64>) -> Result<(), SimError> {
        let end = ticks.unwrap_or_else(|| sc.natural_end());
        let mut events = sc.events.iter().peekable();
        while self.tick_count() < end {
            while let Some(&&(t, e)) = events.peek() {
                if t > self.tick_count() {
                    break;
                }
                self.apply_event(e)?;
                events.next();
            }
            self.tick()?;
        }
        Ok(())
    }
}

/// Runs `sc` from scratch and returns the trace.
pub fn replay(controller: Controller, sc: &Scenario, ticks: Option<u64>) -> Result<Vec<TraceEvent>, SimError> {
    let mut s = Session::for_scenario(controller, sc)?;
    s.keep_trace(true);
    s.run_scenario(sc, ticks)?;
    Ok(s.trace)
}

/// All trace-checkable requirements of `reqs` as a monitor for `config`.
pub fn monitor_for(
    config: &PlantConfig,
    reqs: &[&'static crate::monitor::Requirement],
) -> Result<TraceMonitor, crate::monitor::check::CheckError> {
    TraceMonitor::new(reqs, &Alphabet::new(config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{LockId, Orientation, StreamSide};
    use crate::monitor::catalog;
    use std::sync::{Arc, Mutex};

    fn act(s: &str) -> Action {
        s.parse().unwrap()
    }

    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    impl Shared {
        fn text(&self) -> String {
            String::from_utf8(self.0.lock().unwrap().clone()).unwrap()
        }
    }

    #[test]
    fn sensor_reports_feed_the_controller() {
        let mut s = Session::new(&PlantConfig::full(), FaultProfile::default(), 1).unwrap();
        s.keep_trace(true);
        s.command(act("BarrierCommand(command_close)")).unwrap();
        for _ in 0..2 * crate::sim::plant::P {
            s.tick().unwrap();
        }
        assert_eq!(s.plant().barrier.position, 0);
        assert!(s
            .trace()
            .iter()
            .any(|e| e.action == act("BarrierSensor(sense_closed)") && e.kind == EventKind::Input));
        let seqs: Vec<u64> = s.trace().iter().map(|e| e.seq).collect();
        assert!(seqs.windows(2).all(|w| w[1] == w[0] + 1));
    }

    #[test]
    fn ship_passes_north_upstream() {
        // Level the chamber with the upstream paddles, then open the gates.
        let mut s = Session::new(&PlantConfig::full(), FaultProfile::default(), 1).unwrap();
        s.command(act("PaddleCommand(north,upstream,command_open)")).unwrap();
        for _ in 0..30 {
            s.tick().unwrap();
        }
        assert!(s.params().water(LockId::North, StreamSide::Upstream));
        s.command(act("GateCommand(north,upstream,command_open)")).unwrap();
        for _ in 0..15 {
            s.tick().unwrap();
        }
        let g = s.plant().gate(LockId::North, StreamSide::Upstream, Orientation::West);
        assert_eq!(g.position, crate::sim::plant::P);
        assert_eq!(s.stats().interlock_breaches, 0);
    }

    #[test]
    fn recording_replays_to_the_same_trace() {
        let config = PlantConfig::full();
        let trace = Shared::default();
        let scenario = Shared::default();
        let mut s = Session::new(&config, FaultProfile::default(), 5).unwrap();
        s.set_operator_rate(0.3);
        s.keep_trace(true);
        s.record(Recorder::new(trace.clone(), scenario.clone())).unwrap();
        for t in 0..300 {
            if t == 50 {
                s.fault("sensor_fail@water(south,downstream)".parse().unwrap(), true)
                    .unwrap();
            }
            if t == 70 {
                s.command(act("EmergencyLockCommand(south,activate)")).unwrap();
            }
            s.tick().unwrap();
        }
        s.finish_recording().unwrap();
        let sc: Scenario = scenario.text().parse().unwrap();
        assert_eq!(sc.natural_end(), 300);
        assert_eq!(sc.operator_rate, 0.0);
        let again = replay(Controller::new(&config), &sc, None).unwrap();
        assert_eq!(again, s.trace());
        let written: String = s.trace().iter().map(|e| format!("{e}\n")).collect();
        assert_eq!(trace.text(), written);
    }

    #[test]
    fn monitors_see_every_event() {
        let config = PlantConfig::full();
        let mut s = Session::new(&config, FaultProfile::default(), 9).unwrap();
        s.attach_monitor(monitor_for(&config, &catalog::select("all").unwrap()).unwrap());
        s.set_operator_rate(0.5);
        for _ in 0..2000 {
            s.tick().unwrap();
        }
        assert!(s.new_violations().is_empty(), "{}", s.report(false).unwrap());
        assert_eq!(s.stats().interlock_breaches, 0);
        assert!(s.stats().commands > 500);
    }

    struct Broken;

    impl Write for Broken {
        fn write(&mut self, _: &[u8]) -> io::Result<usize> {
            Err(io::Error::other("disk full"))
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn a_failing_recorder_does_not_stop_the_session() {
        let mut s = Session::new(&PlantConfig::reduced(), FaultProfile::default(), 1).unwrap();
        s.record(Recorder::new(Broken, Shared::default())).unwrap();
        let out = s.command(act("BarrierCommand(command_close)")).unwrap();
        assert!(!out.is_empty());
        assert!(!s.is_recording());
        assert!(s.take_record_error().is_some());
        assert!(s.take_record_error().is_none());
        assert!(!s.tick().unwrap().is_empty());
    }

    #[test]
    fn rejects_non_commands() {
        let mut s = Session::new(&PlantConfig::reduced(), FaultProfile::default(), 1).unwrap();
        assert!(matches!(
            s.command(act("GateSensor(north,upstream,east,sense_open)")),
            Err(SimError::NotACommand(_))
        ));
        assert!(matches!(
            s.command(act("GateCommand(south,upstream,command_open)")),
            Err(SimError::OutsideConfig(_))
        ));
    }
}
