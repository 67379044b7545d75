//! A coarse physical model of the lock complex.
//!
//! Devices move one unit per tick between 0 (closed) and [`P`] (open). Each
//! lock chamber has a water level that drifts toward the outer level of every
//! side with a non-closed gate or paddle. Sensors report on change and every
//! [`HEARTBEAT`] ticks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::controller::ReadSlot;
use crate::domain::{
    split_call, split_top_level, triple_index, Action, ActuatorCommand, DomainError, DoubleLight, DoubleLightStatus,
    LockId, Orientation, PlantConfig, SensorPosition, SingleLight, SingleLightStatus, StreamSide, Value, WaterLevel,
};

/// Travel of a device from closed to open, in ticks.
pub const P: u8 = 10;
/// Every sensor re-reports at this period.
pub const HEARTBEAT: u64 = 25;

/// Outer water levels; the chamber starts in between.
const UPSTREAM_LEVEL: i32 = 4;
const DOWNSTREAM_LEVEL: i32 = 0;
const CHAMBER_START: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Motion {
    Still,
    Opening,
    Closing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Device {
    pub position: u8,
    pub motion: Motion,
}

impl Device {
    const CLOSED: Device = Device {
        position: 0,
        motion: Motion::Still,
    };
    const OPEN: Device = Device {
        position: P,
        motion: Motion::Still,
    };

    fn reading(self) -> SensorPosition {
        match self.position {
            0 => SensorPosition::SenseClosed,
            p if p >= P => SensorPosition::SenseOpen,
            _ => SensorPosition::SenseIntermediate,
        }
    }

    fn advance(&mut self) {
        match self.motion {
            Motion::Opening if self.position < P => self.position += 1,
            Motion::Closing if self.position > 0 => self.position -= 1,
            _ => {}
        }
    }
}

/// What a fault is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Gate(LockId, StreamSide, Orientation),
    Paddle(LockId, StreamSide, Orientation),
    Barrier,
    Water(LockId, StreamSide),
    EnteringLight(LockId, StreamSide, Orientation),
    LeavingLight(LockId, StreamSide, Orientation),
    BarrierLight(StreamSide, Orientation),
}

impl Target {
    fn fits(self, config: &PlantConfig) -> bool {
        let lso = |l, o| config.has_lock(l) && config.has_orientation(o);
        match self {
            Target::Gate(l, _, o)
            | Target::Paddle(l, _, o)
            | Target::EnteringLight(l, _, o)
            | Target::LeavingLight(l, _, o) => lso(l, o),
            Target::Water(l, _) => config.has_lock(l),
            Target::Barrier => config.include_barrier(),
            Target::BarrierLight(_, o) => config.include_barrier() && config.has_orientation(o),
        }
    }

    fn is_light(self) -> bool {
        matches!(
            self,
            Target::EnteringLight(..) | Target::LeavingLight(..) | Target::BarrierLight(..)
        )
    }

    fn is_device(self) -> bool {
        matches!(self, Target::Gate(..) | Target::Paddle(..) | Target::Barrier)
    }

    /// Every target of a configuration, in a fixed order.
    pub fn all(config: &PlantConfig) -> Vec<Target> {
        let mut v: Vec<Target> = Vec::new();
        v.extend(config.triples().map(|(l, s, o)| Target::Gate(l, s, o)));
        v.extend(config.triples().map(|(l, s, o)| Target::Paddle(l, s, o)));
        if config.include_barrier() {
            v.push(Target::Barrier);
        }
        v.extend(config.lock_sides().map(|(l, s)| Target::Water(l, s)));
        v.extend(config.triples().map(|(l, s, o)| Target::EnteringLight(l, s, o)));
        v.extend(config.triples().map(|(l, s, o)| Target::LeavingLight(l, s, o)));
        v.extend(config.barrier_lights().map(|(s, o)| Target::BarrierLight(s, o)));
        v
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Gate(l, s, o) => write!(f, "gate({l},{s},{o})"),
            Target::Paddle(l, s, o) => write!(f, "paddle({l},{s},{o})"),
            Target::Barrier => f.write_str("barrier"),
            Target::Water(l, s) => write!(f, "water({l},{s})"),
            Target::EnteringLight(l, s, o) => write!(f, "entering_light({l},{s},{o})"),
            Target::LeavingLight(l, s, o) => write!(f, "leaving_light({l},{s},{o})"),
            Target::BarrierLight(s, o) => write!(f, "barrier_light({s},{o})"),
        }
    }
}

impl FromStr for Target {
    type Err = PlantError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let text = text.trim();
        let bad = |reason: &str| PlantError::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        if text == "barrier" {
            return Ok(Target::Barrier);
        }
        let (name, inner) = split_call(text).ok_or_else(|| bad("expected target(args)"))?;
        let args = split_top_level(inner);
        let domain = |e: DomainError| bad(&e.to_string());
        let lso = |args: &[&str]| -> Result<(LockId, StreamSide, Orientation), PlantError> {
            match args {
                [l, s, o] => Ok((
                    l.parse().map_err(domain)?,
                    s.parse().map_err(domain)?,
                    o.parse().map_err(domain)?,
                )),
                _ => Err(bad("expected (lock,side,orientation)")),
            }
        };
        Ok(match name {
            "gate" => {
                let (l, s, o) = lso(&args)?;
                Target::Gate(l, s, o)
            }
            "paddle" => {
                let (l, s, o) = lso(&args)?;
                Target::Paddle(l, s, o)
            }
            "entering_light" => {
                let (l, s, o) = lso(&args)?;
                Target::EnteringLight(l, s, o)
            }
            "leaving_light" => {
                let (l, s, o) = lso(&args)?;
                Target::LeavingLight(l, s, o)
            }
            "water" => match args[..] {
                [l, s] => Target::Water(l.parse().map_err(domain)?, s.parse().map_err(domain)?),
                _ => return Err(bad("expected (lock,side)")),
            },
            "barrier_light" => match args[..] {
                [s, o] => Target::BarrierLight(s.parse().map_err(domain)?, o.parse().map_err(domain)?),
                _ => return Err(bad("expected (side,orientation)")),
            },
            _ => return Err(bad("unknown target")),
        })
    }
}

/// A light aspect of either kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Aspect {
    Single(SingleLight),
    Double(DoubleLight),
}

impl fmt::Display for Aspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aspect::Single(a) => a.fmt(f),
            Aspect::Double(a) => a.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FaultKind {
    SensorFail,
    StuckAspect(Aspect),
    MotorStall,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultKind::SensorFail => f.write_str("sensor_fail"),
            FaultKind::StuckAspect(a) => write!(f, "stuck_aspect({a})"),
            FaultKind::MotorStall => f.write_str("motor_stall"),
        }
    }
}

/// Text form `kind@target`, e.g. `stuck_aspect(green)@barrier_light(upstream,east)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fault {
    pub target: Target,
    pub kind: FaultKind,
}

impl Fault {
    /// Whether the kind makes sense for the target.
    pub fn is_well_formed(&self) -> bool {
        match (self.kind, self.target) {
            (FaultKind::SensorFail, _) => true,
            (FaultKind::MotorStall, t) => t.is_device(),
            (FaultKind::StuckAspect(Aspect::Double(_)), Target::EnteringLight(..)) => true,
            (FaultKind::StuckAspect(Aspect::Single(_)), Target::LeavingLight(..) | Target::BarrierLight(..)) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Fault {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.kind, self.target)
    }
}

impl FromStr for Fault {
    type Err = PlantError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| PlantError::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let (kind, target) = text.trim().split_once('@').ok_or_else(|| bad("expected kind@target"))?;
        let target: Target = target.parse()?;
        let kind = match kind.trim() {
            "sensor_fail" => FaultKind::SensorFail,
            "motor_stall" => FaultKind::MotorStall,
            k => {
                let aspect = k
                    .strip_prefix("stuck_aspect(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| bad("unknown fault kind"))?;
                let aspect = if matches!(target, Target::EnteringLight(..)) {
                    Aspect::Double(aspect.parse().map_err(|e: DomainError| bad(&e.to_string()))?)
                } else {
                    Aspect::Single(aspect.parse().map_err(|e: DomainError| bad(&e.to_string()))?)
                };
                FaultKind::StuckAspect(aspect)
            }
        };
        let fault = Fault { target, kind };
        if !fault.is_well_formed() {
            return Err(PlantError::InvalidFault(fault.to_string()));
        }
        Ok(fault)
    }
}

/// Per-tick probabilities of random faults appearing and being repaired.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FaultProfile {
    pub sensor_fail: f64,
    pub stuck_aspect: f64,
    pub motor_stall: f64,
    pub repair: f64,
}

impl FaultProfile {
    pub fn validate(&self) -> Result<(), PlantError> {
        for (name, p) in [
            ("sensor_fail", self.sensor_fail),
            ("stuck_aspect", self.stuck_aspect),
            ("motor_stall", self.motor_stall),
            ("repair", self.repair),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(PlantError::InvalidProfile(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn is_quiet(&self) -> bool {
        self.sensor_fail == 0.0 && self.stuck_aspect == 0.0 && self.motor_stall == 0.0
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlantError {
    #[error("`{0}` addresses a device outside the configuration")]
    OutsideConfig(String),
    #[error("`{0}` is not an actuator command")]
    NotAnActuator(String),
    #[error("`{0}` is not a traffic-light read")]
    NotALightRead(String),
    #[error("{existing} is already present on that target; cannot add {requested}")]
    ConflictingFault { existing: String, requested: String },
    #[error("fault `{0}` does not fit its target")]
    InvalidFault(String),
    #[error("invalid fault profile: {0}")]
    InvalidProfile(String),
    #[error("cannot parse `{text}`: {reason}")]
    Parse { text: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    config: PlantConfig,
    pub gates: [Device; 8],
    pub paddles: [Device; 8],
    pub barrier: Device,
    pub entering: [DoubleLight; 8],
    pub leaving: [SingleLight; 8],
    /// Indexed by `side*2 + orientation`.
    pub barrier_lights: [SingleLight; 4],
    /// Chamber level per lock.
    pub chamber: [i32; 2],
    faults: BTreeMap<Target, FaultKind>,
    profile: FaultProfile,
    tick: u64,
    rng: ChaCha8Rng,
}

fn outer_level(s: StreamSide) -> i32 {
    match s {
        StreamSide::Upstream => UPSTREAM_LEVEL,
        StreamSide::Downstream => DOWNSTREAM_LEVEL,
    }
}

fn water_reading(diff: i32) -> WaterLevel {
    if diff == 0 {
        WaterLevel::Equal
    } else {
        WaterLevel::Unequal
    }
}

impl Plant {
    /// Barrier open, gates and paddles closed, lights red, water unequal
    /// across every gate.
    pub fn new(config: &PlantConfig, profile: FaultProfile, seed: u64) -> Result<Plant, PlantError> {
        profile.validate()?;
        Ok(Plant {
            config: config.clone(),
            gates: [Device::CLOSED; 8],
            paddles: [Device::CLOSED; 8],
            barrier: Device::OPEN,
            entering: [DoubleLight::SingleRed; 8],
            leaving: [SingleLight::Red; 8],
            barrier_lights: [SingleLight::Red; 4],
            chamber: [CHAMBER_START; 2],
            faults: BTreeMap::new(),
            profile,
            tick: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.config
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn gate(&self, l: LockId, s: StreamSide, o: Orientation) -> Device {
        self.gates[triple_index(l, s, o)]
    }

    pub fn paddle(&self, l: LockId, s: StreamSide, o: Orientation) -> Device {
        self.paddles[triple_index(l, s, o)]
    }

    /// Chamber level minus the outer level at `s`.
    pub fn water_differential(&self, l: LockId, s: StreamSide) -> i32 {
        self.chamber[l.ordinal()] - outer_level(s)
    }

    pub fn faults(&self) -> impl Iterator<Item = Fault> + '_ {
        self.faults.iter().map(|(&target, &kind)| Fault { target, kind })
    }

    fn fault(&self, t: Target) -> Option<FaultKind> {
        self.faults.get(&t).copied()
    }

    fn sensor_failed(&self, t: Target) -> bool {
        self.fault(t) == Some(FaultKind::SensorFail)
    }

    /// Adds (`on`) or removes a fault. Re-adding the same fault changes
    /// nothing; adding a different one to an occupied target is an error.
    pub fn inject_fault(&mut self, fault: Fault, on: bool) -> Result<(), PlantError> {
        if !fault.target.fits(&self.config) {
            return Err(PlantError::OutsideConfig(fault.to_string()));
        }
        if !fault.is_well_formed() {
            return Err(PlantError::InvalidFault(fault.to_string()));
        }
        if !on {
            if self.faults.get(&fault.target) == Some(&fault.kind) {
                self.faults.remove(&fault.target);
            }
            return Ok(());
        }
        match self.faults.get(&fault.target) {
            Some(&k) if k != fault.kind => Err(PlantError::ConflictingFault {
                existing: Fault {
                    target: fault.target,
                    kind: k,
                }
                .to_string(),
                requested: fault.to_string(),
            }),
            _ => {
                self.faults.insert(fault.target, fault.kind);
                if let FaultKind::StuckAspect(a) = fault.kind {
                    self.set_aspect(fault.target, a);
                }
                Ok(())
            }
        }
    }

    fn set_aspect(&mut self, t: Target, a: Aspect) {
        match (t, a) {
            (Target::EnteringLight(l, s, o), Aspect::Double(d)) => self.entering[triple_index(l, s, o)] = d,
            (Target::LeavingLight(l, s, o), Aspect::Single(x)) => self.leaving[triple_index(l, s, o)] = x,
            (Target::BarrierLight(s, o), Aspect::Single(x)) => self.barrier_lights[s.ordinal() * 2 + o.ordinal()] = x,
            _ => {}
        }
    }

    fn device_mut(&mut self, t: Target) -> &mut Device {
        match t {
            Target::Gate(l, s, o) => &mut self.gates[triple_index(l, s, o)],
            Target::Paddle(l, s, o) => &mut self.paddles[triple_index(l, s, o)],
            _ => &mut self.barrier,
        }
    }

    /// Applies one actuator output.
    pub fn apply(&mut self, out: &Action) -> Result<(), PlantError> {
        if !out.fits(&self.config) {
            return Err(PlantError::OutsideConfig(out.to_string()));
        }
        let (target, cmd) = match *out {
            Action::GateActuator(l, s, o, c) => (Target::Gate(l, s, o), c),
            Action::PaddleActuator(l, s, o, c) => (Target::Paddle(l, s, o), c),
            Action::BarrierActuator(c) => (Target::Barrier, c),
            Action::EnteringTrafficLightActuator(l, s, o, d) => {
                self.light(Target::EnteringLight(l, s, o), Aspect::Double(d));
                return Ok(());
            }
            Action::LeavingTrafficLightActuator(l, s, o, x) => {
                self.light(Target::LeavingLight(l, s, o), Aspect::Single(x));
                return Ok(());
            }
            Action::BarrierTrafficLightActuator(s, o, x) => {
                self.light(Target::BarrierLight(s, o), Aspect::Single(x));
                return Ok(());
            }
            _ => return Err(PlantError::NotAnActuator(out.to_string())),
        };
        let stalled = self.fault(target) == Some(FaultKind::MotorStall);
        let dev = self.device_mut(target);
        dev.motion = match cmd {
            ActuatorCommand::DoOpen if !stalled => Motion::Opening,
            ActuatorCommand::DoClose if !stalled => Motion::Closing,
            ActuatorCommand::DoOpen | ActuatorCommand::DoClose => dev.motion,
            _ => Motion::Still,
        };
        Ok(())
    }

    fn light(&mut self, t: Target, a: Aspect) {
        if !matches!(self.fault(t), Some(FaultKind::StuckAspect(_))) {
            self.set_aspect(t, a);
        }
    }

    /// Answers an inline light read.
    pub fn respond(&self, slot: ReadSlot) -> Value {
        match slot {
            ReadSlot::Entering(l, s, o) => Value::DoubleStatus(if self.sensor_failed(Target::EnteringLight(l, s, o)) {
                DoubleLightStatus::FailDouble
            } else {
                DoubleLightStatus::Show(self.entering[triple_index(l, s, o)])
            }),
            ReadSlot::Leaving(l, s, o) => Value::SingleStatus(if self.sensor_failed(Target::LeavingLight(l, s, o)) {
                SingleLightStatus::FailSingle
            } else {
                SingleLightStatus::Show(self.leaving[triple_index(l, s, o)])
            }),
            ReadSlot::Barrier(s, o) => Value::SingleStatus(if self.sensor_failed(Target::BarrierLight(s, o)) {
                SingleLightStatus::FailSingle
            } else {
                SingleLightStatus::Show(self.barrier_lights[s.ordinal() * 2 + o.ordinal()])
            }),
        }
    }

    /// Answers a read given as an action; its value is ignored.
    pub fn respond_to(&self, read: &Action) -> Result<Action, PlantError> {
        let slot = match *read {
            Action::EnteringTrafficLightSensor(l, s, o, _) => ReadSlot::Entering(l, s, o),
            Action::LeavingTrafficLightSensor(l, s, o, _) => ReadSlot::Leaving(l, s, o),
            Action::BarrierTrafficLightSensor(s, o, _) => ReadSlot::Barrier(s, o),
            _ => return Err(PlantError::NotALightRead(read.to_string())),
        };
        if !read.fits(&self.config) {
            return Err(PlantError::OutsideConfig(read.to_string()));
        }
        Ok(slot
            .with_value(self.respond(slot))
            .expect("plant answers with the right sort"))
    }

    fn device_event(&self, t: Target, reading: SensorPosition) -> Action {
        let v = if self.sensor_failed(t) {
            SensorPosition::FailPosition
        } else {
            reading
        };
        match t {
            Target::Gate(l, s, o) => Action::GateSensor(l, s, o, v),
            Target::Paddle(l, s, o) => Action::PaddleSensor(l, s, o, v),
            _ => Action::BarrierSensor(v),
        }
    }

    fn water_event(&self, l: LockId, s: StreamSide) -> Action {
        let v = if self.sensor_failed(Target::Water(l, s)) {
            WaterLevel::FailWaterSensor
        } else {
            water_reading(self.water_differential(l, s))
        };
        Action::WaterSensor(l, s, v)
    }

    fn device_targets(&self) -> Vec<Target> {
        Target::all(&self.config)
            .into_iter()
            .filter(|t| t.is_device())
            .collect()
    }

    fn device(&self, t: Target) -> Device {
        match t {
            Target::Gate(l, s, o) => self.gate(l, s, o),
            Target::Paddle(l, s, o) => self.paddle(l, s, o),
            _ => self.barrier,
        }
    }

    /// Advances one tick and returns the spontaneous sensor reports.
    pub fn tick(&mut self) -> Vec<Action> {
        self.tick += 1;
        self.random_faults();
        let devices = self.device_targets();
        let before: Vec<SensorPosition> = devices.iter().map(|&t| self.device(t).reading()).collect();
        let water_before: Vec<WaterLevel> = self
            .config
            .lock_sides()
            .map(|(l, s)| water_reading(self.water_differential(l, s)))
            .collect();
        for &t in &devices {
            self.device_mut(t).advance();
        }
        let locks = self.config.locks().to_vec();
        for l in locks {
            for s in StreamSide::ALL.iter().copied() {
                let open = self
                    .config
                    .orientations()
                    .iter()
                    .filter(|&&o| self.gate(l, s, o).position > 0)
                    .count()
                    + self
                        .config
                        .orientations()
                        .iter()
                        .filter(|&&o| self.paddle(l, s, o).position > 0)
                        .count();
                let c = &mut self.chamber[l.ordinal()];
                let target = outer_level(s);
                let step = (open as i32).min((*c - target).abs());
                *c += step * (target - *c).signum();
            }
        }
        let heartbeat = self.tick.is_multiple_of(HEARTBEAT);
        let mut events = Vec::new();
        for (i, &t) in devices.iter().enumerate() {
            let now = self.device(t).reading();
            if heartbeat || now != before[i] {
                events.push(self.device_event(t, now));
            }
        }
        let sides: Vec<(LockId, StreamSide)> = self.config.lock_sides().collect();
        for (i, (l, s)) in sides.into_iter().enumerate() {
            if heartbeat || water_reading(self.water_differential(l, s)) != water_before[i] {
                events.push(self.water_event(l, s));
            }
        }
        events
    }

    fn random_faults(&mut self) {
        if self.profile.is_quiet() && self.profile.repair == 0.0 {
            return;
        }
        let targets = Target::all(&self.config);
        let p = self.profile;
        if p.repair > 0.0 && !self.faults.is_empty() && self.rng.random_bool(p.repair) {
            let i = self.rng.random_range(0..self.faults.len());
            let t = *self.faults.keys().nth(i).expect("index in range");
            self.faults.remove(&t);
        }
        let pick = |rng: &mut ChaCha8Rng, filter: &dyn Fn(&Target) -> bool| {
            let c: Vec<Target> = targets.iter().copied().filter(|t| filter(t)).collect();
            c[rng.random_range(0..c.len())]
        };
        let mut new = Vec::new();
        if p.sensor_fail > 0.0 && self.rng.random_bool(p.sensor_fail) {
            new.push(Fault {
                target: pick(&mut self.rng, &|_| true),
                kind: FaultKind::SensorFail,
            });
        }
        if p.motor_stall > 0.0 && self.rng.random_bool(p.motor_stall) {
            new.push(Fault {
                target: pick(&mut self.rng, &|t| t.is_device()),
                kind: FaultKind::MotorStall,
            });
        }
        if p.stuck_aspect > 0.0 && self.rng.random_bool(p.stuck_aspect) {
            let target = pick(&mut self.rng, &|t| t.is_light());
            let aspect = match target {
                Target::EnteringLight(..) => Aspect::Double(DoubleLight::ALL[self.rng.random_range(0..4)]),
                _ => Aspect::Single(SingleLight::ALL[self.rng.random_range(0..2)]),
            };
            new.push(Fault {
                target,
                kind: FaultKind::StuckAspect(aspect),
            });
        }
        for f in new {
            if !self.faults.contains_key(&f.target) {
                self.inject_fault(f, true).expect("generated faults fit");
            }
        }
    }

    /// A gate that is not closed while a gate or paddle on the other side of
    /// the same lock is not closed either.
    pub fn interlock_breach(&self) -> Option<String> {
        for (l, s, o) in self.config.triples() {
            if self.gate(l, s, o).position == 0 {
                continue;
            }
            for &o2 in self.config.orientations() {
                let opp = s.opposite();
                if self.gate(l, opp, o2).position > 0 || self.paddle(l, opp, o2).position > 0 {
                    return Some(format!(
                        "gate({l},{s},{o}) and the {opp} side of lock {l} are both open"
                    ));
                }
            }
        }
        None
    }

    /// The value the sensor of `t` would report now, ignoring faults.
    pub fn true_reading(&self, t: Target) -> Option<Value> {
        Some(match t {
            Target::Gate(..) | Target::Paddle(..) | Target::Barrier => Value::Position(self.device(t).reading()),
            Target::Water(l, s) => Value::Water(water_reading(self.water_differential(l, s))),
            _ => return None,
        })
    }

    pub fn summary(&self) -> PlantSummary {
        let dev = |t: Target| DeviceSummary {
            target: t.to_string(),
            position: self.device(t).position,
            motion: self.device(t).motion,
        };
        PlantSummary {
            tick: self.tick,
            devices: self.device_targets().into_iter().map(dev).collect(),
            lights: Target::all(&self.config)
                .into_iter()
                .filter(|t| t.is_light())
                .map(|t| {
                    let aspect = match t {
                        Target::EnteringLight(l, s, o) => self.entering[triple_index(l, s, o)].to_string(),
                        Target::LeavingLight(l, s, o) => self.leaving[triple_index(l, s, o)].to_string(),
                        Target::BarrierLight(s, o) => self.barrier_lights[s.ordinal() * 2 + o.ordinal()].to_string(),
                        _ => unreachable!("filtered to lights"),
                    };
                    (t.to_string(), aspect)
                })
                .collect(),
            water: self
                .config
                .lock_sides()
                .map(|(l, s)| (format!("water({l},{s})"), self.water_differential(l, s)))
                .collect(),
            faults: self.faults().map(|f| f.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeviceSummary {
    pub target: String,
    pub position: u8,
    pub motion: Motion,
}

/// Serializable view of the plant for snapshots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlantSummary {
    pub tick: u64,
    pub devices: Vec<DeviceSummary>,
    pub lights: Vec<(String, String)>,
    pub water: Vec<(String, i32)>,
    pub faults: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(s: &str) -> Action {
        s.parse().unwrap()
    }

    fn plant() -> Plant {
        Plant::new(&PlantConfig::full(), FaultProfile::default(), 1).unwrap()
    }

    #[test]
    fn initial_state() {
        let p = plant();
        assert_eq!(p.faults().count(), 0);
        assert_eq!(p.barrier.position, P);
        assert!(p.gates.iter().all(|g| g.position == 0));
        for (l, s) in PlantConfig::full().lock_sides() {
            assert_ne!(p.water_differential(l, s), 0);
        }
    }

    #[test]
    fn motion_and_threshold_events() {
        let mut p = plant();
        p.apply(&act("GateActuator(north,upstream,east,do_open)")).unwrap();
        let ev = p.tick();
        assert!(ev.contains(&act("GateSensor(north,upstream,east,sense_intermediate)")));
        for _ in 0..P - 2 {
            p.tick();
        }
        assert_eq!(
            p.gate(LockId::North, StreamSide::Upstream, Orientation::East).position,
            P - 1
        );
        let ev = p.tick();
        assert!(ev.contains(&act("GateSensor(north,upstream,east,sense_open)")));
        p.apply(&act("GateActuator(north,upstream,east,do_close)")).unwrap();
        p.tick();
        p.apply(&act("GateActuator(north,upstream,east,do_emergencyStop)"))
            .unwrap();
        let g = p.gate(LockId::North, StreamSide::Upstream, Orientation::East);
        assert_eq!((g.position, g.motion), (P - 1, Motion::Still));
        p.tick();
        assert_eq!(
            p.gate(LockId::North, StreamSide::Upstream, Orientation::East).position,
            P - 1
        );
    }

    #[test]
    fn quiescent_plant_is_silent_between_heartbeats() {
        let mut p = plant();
        for t in 1..HEARTBEAT {
            assert!(p.tick().is_empty(), "tick {t}");
        }
        assert!(!p.tick().is_empty());
    }

    #[test]
    fn water_levels_out_through_paddles() {
        let mut p = plant();
        p.apply(&act("PaddleActuator(north,downstream,east,do_open)")).unwrap();
        let mut seen = false;
        for _ in 0..10 {
            seen |= p.tick().contains(&act("WaterSensor(north,downstream,equal)"));
        }
        assert!(seen);
        assert_eq!(p.water_differential(LockId::North, StreamSide::Downstream), 0);
        assert_ne!(p.water_differential(LockId::North, StreamSide::Upstream), 0);
    }

    #[test]
    fn faults() {
        let mut p = plant();
        let stuck: Fault = "stuck_aspect(green)@leaving_light(north,upstream,east)"
            .parse()
            .unwrap();
        p.inject_fault(stuck, true).unwrap();
        p.apply(&act("LeavingTrafficLightActuator(north,upstream,east,red)"))
            .unwrap();
        assert_eq!(
            p.respond_to(&act("LeavingTrafficLightSensor(north,upstream,east,fail_single)"))
                .unwrap(),
            act("LeavingTrafficLightSensor(north,upstream,east,show(green))")
        );
        let fail: Fault = "sensor_fail@entering_light(north,upstream,east)".parse().unwrap();
        p.inject_fault(fail, true).unwrap();
        assert_eq!(
            p.respond(ReadSlot::Entering(
                LockId::North,
                StreamSide::Upstream,
                Orientation::East
            )),
            Value::DoubleStatus(DoubleLightStatus::FailDouble)
        );
        let stall: Fault = "motor_stall@gate(south,downstream,west)".parse().unwrap();
        p.inject_fault(stall, true).unwrap();
        p.apply(&act("GateActuator(south,downstream,west,do_open)")).unwrap();
        assert_eq!(
            p.gate(LockId::South, StreamSide::Downstream, Orientation::West).motion,
            Motion::Still
        );
        let before: Vec<Fault> = p.faults().collect();
        p.inject_fault(stall, true).unwrap();
        assert_eq!(p.faults().collect::<Vec<_>>(), before);
        assert!(matches!(
            p.inject_fault("sensor_fail@gate(south,downstream,west)".parse().unwrap(), true),
            Err(PlantError::ConflictingFault { .. })
        ));
        p.inject_fault(stall, false).unwrap();
        assert_eq!(p.faults().count(), 2);
        assert!("motor_stall@water(north,upstream)".parse::<Fault>().is_err());
        assert!(p.respond_to(&act("WaterSensor(north,upstream,equal)")).is_err());
        let water_fail: Fault = "sensor_fail@water(north,upstream)".parse().unwrap();
        p.inject_fault(water_fail, true).unwrap();
        let mut p2 = p.clone();
        for _ in 0..HEARTBEAT - p.tick_count() % HEARTBEAT {
            p2.tick();
        }
        assert_eq!(p2.tick_count() % HEARTBEAT, 0);
        assert!(p2.summary().faults.contains(&water_fail.to_string()));
    }

    #[test]
    fn fault_text_round_trips() {
        for t in [
            "sensor_fail@barrier",
            "motor_stall@paddle(north,upstream,west)",
            "stuck_aspect(redgreen)@entering_light(south,downstream,east)",
            "stuck_aspect(green)@barrier_light(upstream,east)",
        ] {
            assert_eq!(t.parse::<Fault>().unwrap().to_string(), t);
        }
        assert!("stuck_aspect(green)@entering_light(south,downstream,east)"
            .parse::<Fault>()
            .is_err());
    }
}
