//! The lock-complex controller as a deterministic labelled transition system.
//!
//! A handler runs in three phases. In [`Mode::Stable`] every console command,
//! spontaneous sensor report and `skip` is accepted. A handler that needs to
//! look at traffic lights moves to [`Mode::Awaiting`] and accepts exactly the
//! next light-sensor read of its plan. Its actuator outputs are then flushed
//! one per step in [`Mode::Emitting`]. Parameter updates become visible when
//! the burst returns to `Stable`.

use std::fmt;

use arrayvec::ArrayVec;
use thiserror::Error;

use crate::domain::{
    literal_enum, pair_index, triple_index, Action, ActuatorCommand, Alphabet, ConsoleCommand, DomainError,
    DoubleLight, DoubleLightStatus, EmergencyCommand, LockId, Orientation, PlantConfig, SensorPosition, SingleLight,
    SingleLightStatus, StreamSide, Value, WaterLevel,
};

literal_enum!(
    /// Administrated position of the barrier, a gate or a paddle.
    Position {
        Opening => "opening",
        Closing => "closing",
        Opened => "opened",
        Closed => "closed",
    }
);

/// The stored parameters of the controller. Tables are indexed by
/// `lock*4 + side*2 + orientation` and `lock*2 + side`; slots outside the
/// configured plant keep their initial value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ControllerParams {
    pub barrier_status: Position,
    pub barrier_in_emergency: bool,
    pub barrier_light_set: [SingleLight; 2],
    pub gate_status: [Position; 8],
    pub paddle_status: [Position; 8],
    pub entering_light_set: [DoubleLight; 4],
    pub leaving_light_set: [SingleLight; 4],
    pub water_equal: [bool; 4],
    pub locks_in_emergency: [bool; 2],
}

impl ControllerParams {
    pub fn initial() -> Self {
        ControllerParams {
            barrier_status: Position::Opened,
            barrier_in_emergency: false,
            barrier_light_set: [SingleLight::Red; 2],
            gate_status: [Position::Closed; 8],
            paddle_status: [Position::Closed; 8],
            entering_light_set: [DoubleLight::SingleRed; 4],
            leaving_light_set: [SingleLight::Red; 4],
            water_equal: [false; 4],
            locks_in_emergency: [false; 2],
        }
    }

    pub fn gate(&self, l: LockId, s: StreamSide, o: Orientation) -> Position {
        self.gate_status[triple_index(l, s, o)]
    }

    pub fn paddle(&self, l: LockId, s: StreamSide, o: Orientation) -> Position {
        self.paddle_status[triple_index(l, s, o)]
    }

    pub fn entering(&self, l: LockId, s: StreamSide) -> DoubleLight {
        self.entering_light_set[pair_index(l, s)]
    }

    pub fn leaving(&self, l: LockId, s: StreamSide) -> SingleLight {
        self.leaving_light_set[pair_index(l, s)]
    }

    pub fn water(&self, l: LockId, s: StreamSide) -> bool {
        self.water_equal[pair_index(l, s)]
    }

    pub fn barrier_light(&self, s: StreamSide) -> SingleLight {
        self.barrier_light_set[s.ordinal()]
    }

    pub fn in_emergency(&self, l: LockId) -> bool {
        self.locks_in_emergency[l.ordinal()]
    }

    /// The stored values of the configured plant by name, e.g.
    /// `("gate(north,upstream,east)", "closed")`.
    pub fn entries(&self, config: &PlantConfig) -> Vec<(String, String)> {
        let mut v = Vec::new();
        for (l, s, o) in config.triples() {
            v.push((format!("gate({l},{s},{o})"), self.gate(l, s, o).to_string()));
            v.push((format!("paddle({l},{s},{o})"), self.paddle(l, s, o).to_string()));
        }
        for (l, s) in config.lock_sides() {
            v.push((format!("entering_light({l},{s})"), self.entering(l, s).to_string()));
            v.push((format!("leaving_light({l},{s})"), self.leaving(l, s).to_string()));
            let w = if self.water(l, s) { "equal" } else { "unequal" };
            v.push((format!("water({l},{s})"), w.to_string()));
        }
        for &l in config.locks() {
            v.push((format!("emergency({l})"), self.in_emergency(l).to_string()));
        }
        if config.include_barrier() {
            v.push(("barrier".to_string(), self.barrier_status.to_string()));
            v.push(("emergency(barrier)".to_string(), self.barrier_in_emergency.to_string()));
            for &s in config.stream_sides() {
                v.push((format!("barrier_light({s})"), self.barrier_light(s).to_string()));
            }
        }
        v
    }
}

impl Default for ControllerParams {
    fn default() -> Self {
        ControllerParams::initial()
    }
}

/// A pending inline read of one traffic-light sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReadSlot {
    Entering(LockId, StreamSide, Orientation),
    Leaving(LockId, StreamSide, Orientation),
    Barrier(StreamSide, Orientation),
}

impl ReadSlot {
    /// Number of possible responses.
    pub fn arity(self) -> usize {
        match self {
            ReadSlot::Entering(..) => DoubleLightStatus::ALL.len(),
            ReadSlot::Leaving(..) | ReadSlot::Barrier(..) => SingleLightStatus::ALL.len(),
        }
    }

    /// The read action carrying the response with the given ordinal.
    pub fn action(self, response: usize) -> Action {
        match self {
            ReadSlot::Entering(l, s, o) => {
                Action::EnteringTrafficLightSensor(l, s, o, DoubleLightStatus::ALL[response])
            }
            ReadSlot::Leaving(l, s, o) => Action::LeavingTrafficLightSensor(l, s, o, SingleLightStatus::ALL[response]),
            ReadSlot::Barrier(s, o) => Action::BarrierTrafficLightSensor(s, o, SingleLightStatus::ALL[response]),
        }
    }

    /// Response ordinal if `action` answers this read.
    pub fn response_of(self, action: &Action) -> Option<u8> {
        match (self, *action) {
            (ReadSlot::Entering(l, s, o), Action::EnteringTrafficLightSensor(l2, s2, o2, v))
                if (l, s, o) == (l2, s2, o2) =>
            {
                Some(v.ordinal() as u8)
            }
            (ReadSlot::Leaving(l, s, o), Action::LeavingTrafficLightSensor(l2, s2, o2, v))
                if (l, s, o) == (l2, s2, o2) =>
            {
                Some(v.ordinal() as u8)
            }
            (ReadSlot::Barrier(s, o), Action::BarrierTrafficLightSensor(s2, o2, v)) if (s, o) == (s2, o2) => {
                Some(v.ordinal() as u8)
            }
            _ => None,
        }
    }

    /// Converts a responder value into a read action, checking its sort.
    pub fn with_value(self, value: Value) -> Result<Action, ControllerError> {
        match (self, value) {
            (ReadSlot::Entering(..), Value::DoubleStatus(v)) => Ok(self.action(v.ordinal())),
            (ReadSlot::Leaving(..) | ReadSlot::Barrier(..), Value::SingleStatus(v)) => Ok(self.action(v.ordinal())),
            _ => Err(ControllerError::IllTypedResponse {
                read: self.to_string(),
                value: value.to_string(),
            }),
        }
    }
}

impl fmt::Display for ReadSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReadSlot::Entering(l, s, o) => write!(f, "EnteringTrafficLightSensor({l},{s},{o},_)"),
            ReadSlot::Leaving(l, s, o) => write!(f, "LeavingTrafficLightSensor({l},{s},{o},_)"),
            ReadSlot::Barrier(s, o) => write!(f, "BarrierTrafficLightSensor({s},{o},_)"),
        }
    }
}

pub type Reads = ArrayVec<ReadSlot, 4>;
pub type Responses = ArrayVec<u8, 4>;
pub type Outputs = ArrayVec<Action, 16>;

/// Handler phase.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Mode {
    Stable,
    /// `responses` holds the ordinals of the reads answered so far.
    Awaiting {
        input: Action,
        responses: Responses,
    },
    /// `emitted` outputs of the burst have already been sent.
    Emitting {
        input: Action,
        responses: Responses,
        emitted: u8,
    },
}

/// Parameters as of the start of the current burst plus the handler phase.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ControllerState {
    pub params: ControllerParams,
    pub mode: Mode,
}

impl ControllerState {
    pub fn is_stable(&self) -> bool {
        self.mode == Mode::Stable
    }
}

/// Deliberate defects used to show that the requirement checks have teeth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Gates open without an equal water level.
    DropWaterGuard,
    /// Gates close while the lock is in emergency mode.
    DropGateCloseEmergencyCheck,
    /// Gates close although the lights are not set to red.
    DropGateCloseGuard,
    /// The barrier opens without reading its traffic lights.
    BarrierOpenWithoutLightReads,
    /// A barrier stop only stops the engine and leaves the lights alone.
    SkipLightRedOnStop,
    /// A failed single-light sensor is taken to show red.
    FailSingleCountsAsRed,
    /// Paddles open while the opposite paddles are not closed.
    DropOppositePaddleCheck,
    /// Entering lights go to red-green while the leaving lights are green.
    DropRedgreenGuard,
    /// Every `sense_open` is acknowledged with an end stop.
    DropEndstopCondition,
}

impl Mutation {
    pub const ALL: &'static [Mutation] = &[
        Mutation::DropWaterGuard,
        Mutation::DropGateCloseEmergencyCheck,
        Mutation::DropGateCloseGuard,
        Mutation::BarrierOpenWithoutLightReads,
        Mutation::SkipLightRedOnStop,
        Mutation::FailSingleCountsAsRed,
        Mutation::DropOppositePaddleCheck,
        Mutation::DropRedgreenGuard,
        Mutation::DropEndstopCondition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::DropWaterGuard => "drop_water_guard",
            Mutation::DropGateCloseEmergencyCheck => "drop_gate_close_emergency_check",
            Mutation::DropGateCloseGuard => "drop_gate_close_guard",
            Mutation::BarrierOpenWithoutLightReads => "barrier_open_without_light_reads",
            Mutation::SkipLightRedOnStop => "skip_light_red_on_stop",
            Mutation::FailSingleCountsAsRed => "fail_single_counts_as_red",
            Mutation::DropOppositePaddleCheck => "drop_opposite_paddle_check",
            Mutation::DropRedgreenGuard => "drop_redgreen_guard",
            Mutation::DropEndstopCondition => "drop_endstop_condition",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mutation {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutation::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| DomainError::Parse {
                text: s.to_string(),
                reason: "unknown mutation".into(),
            })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ControllerError {
    #[error("action `{action}` is not enabled in {mode} mode")]
    NotEnabled { action: String, mode: &'static str },
    #[error("a burst can only start from a stable state")]
    NotStable,
    #[error("response `{value}` does not fit read `{read}`")]
    IllTypedResponse { read: String, value: String },
}

/// Result of driving one input to the next stable state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Burst {
    pub params: ControllerParams,
    pub reads: Vec<Action>,
    pub outputs: Vec<Action>,
}

impl Burst {
    /// Input, reads and outputs in trace order.
    pub fn actions(&self, input: Action) -> impl Iterator<Item = (crate::trace::EventKind, Action)> + '_ {
        use crate::trace::EventKind;
        std::iter::once((EventKind::Input, input))
            .chain(self.reads.iter().map(|&a| (EventKind::Read, a)))
            .chain(self.outputs.iter().map(|&a| (EventKind::Output, a)))
    }
}

const ENTERING_OPEN_OK: [DoubleLightStatus; 3] = [
    DoubleLightStatus::Show(DoubleLight::SingleRed),
    DoubleLightStatus::Show(DoubleLight::RedRed),
    DoubleLightStatus::Show(DoubleLight::RedGreen),
];

fn emergency_aspect(l: DoubleLight) -> DoubleLight {
    match l {
        DoubleLight::SingleGreen | DoubleLight::SingleRed => DoubleLight::SingleRed,
        DoubleLight::RedGreen | DoubleLight::RedRed => DoubleLight::RedRed,
    }
}

/// The controller for one plant configuration.
#[derive(Debug, Clone)]
pub struct Controller {
    config: PlantConfig,
    mutation: Option<Mutation>,
    stable_inputs: Vec<Action>,
}

impl Controller {
    pub fn new(config: &PlantConfig) -> Self {
        let stable_inputs = Alphabet::new(config)
            .actions()
            .iter()
            .copied()
            .filter(|a| a.kind().is_stable_input())
            .collect();
        Controller {
            config: config.clone(),
            mutation: None,
            stable_inputs,
        }
    }

    pub fn with_mutation(config: &PlantConfig, mutation: Mutation) -> Self {
        Controller {
            mutation: Some(mutation),
            ..Controller::new(config)
        }
    }

    pub fn config(&self) -> &PlantConfig {
        &self.config
    }

    pub fn mutation(&self) -> Option<Mutation> {
        self.mutation
    }

    fn mutated(&self, m: Mutation) -> bool {
        self.mutation == Some(m)
    }

    pub fn initial_state(&self) -> ControllerState {
        ControllerState {
            params: ControllerParams::initial(),
            mode: Mode::Stable,
        }
    }

    /// All inputs accepted in a stable state, in alphabet order.
    pub fn stable_inputs(&self) -> &[Action] {
        &self.stable_inputs
    }

    pub fn enabled(&self, state: &ControllerState) -> Vec<Action> {
        match &state.mode {
            Mode::Stable => self.stable_inputs.clone(),
            Mode::Awaiting { input, responses } => {
                let slot = self.plan(&state.params, input)[responses.len()];
                (0..slot.arity()).map(|r| slot.action(r)).collect()
            }
            Mode::Emitting {
                input,
                responses,
                emitted,
            } => {
                let (outputs, _) = self.resolve(&state.params, input, responses);
                vec![outputs[*emitted as usize]]
            }
        }
    }

    pub fn step(&self, state: &ControllerState, action: &Action) -> Result<ControllerState, ControllerError> {
        let not_enabled = |mode| ControllerError::NotEnabled {
            action: action.to_string(),
            mode,
        };
        let params = state.params;
        match &state.mode {
            Mode::Stable => {
                if !action.kind().is_stable_input() || !action.fits(&self.config) {
                    return Err(not_enabled("stable"));
                }
                Ok(self.after_reads(params, *action, Responses::new()))
            }
            Mode::Awaiting { input, responses } => {
                let plan = self.plan(&params, input);
                let r = plan[responses.len()]
                    .response_of(action)
                    .ok_or_else(|| not_enabled("awaiting"))?;
                let mut responses = responses.clone();
                responses.push(r);
                if responses.len() < plan.len() {
                    Ok(ControllerState {
                        params,
                        mode: Mode::Awaiting {
                            input: *input,
                            responses,
                        },
                    })
                } else {
                    Ok(self.after_reads(params, *input, responses))
                }
            }
            Mode::Emitting {
                input,
                responses,
                emitted,
            } => {
                let (outputs, next) = self.resolve(&params, input, responses);
                if outputs[*emitted as usize] != *action {
                    return Err(not_enabled("emitting"));
                }
                let emitted = emitted + 1;
                if emitted as usize == outputs.len() {
                    Ok(ControllerState {
                        params: next,
                        mode: Mode::Stable,
                    })
                } else {
                    Ok(ControllerState {
                        params,
                        mode: Mode::Emitting {
                            input: *input,
                            responses: responses.clone(),
                            emitted,
                        },
                    })
                }
            }
        }
    }

    fn after_reads(&self, params: ControllerParams, input: Action, responses: Responses) -> ControllerState {
        if responses.len() < self.plan(&params, &input).len() {
            return ControllerState {
                params,
                mode: Mode::Awaiting { input, responses },
            };
        }
        let (outputs, next) = self.resolve(&params, &input, &responses);
        if outputs.is_empty() {
            ControllerState {
                params: next,
                mode: Mode::Stable,
            }
        } else {
            ControllerState {
                params,
                mode: Mode::Emitting {
                    input,
                    responses,
                    emitted: 0,
                },
            }
        }
    }

    /// Drives `input` from a stable state to the next stable state, asking
    /// `responder` for every inline read.
    pub fn run_burst(
        &self,
        params: &ControllerParams,
        input: &Action,
        mut responder: impl FnMut(ReadSlot) -> Value,
    ) -> Result<Burst, ControllerError> {
        if !input.kind().is_stable_input() || !input.fits(&self.config) {
            return Err(ControllerError::NotEnabled {
                action: input.to_string(),
                mode: "stable",
            });
        }
        let plan = self.plan(params, input);
        let mut reads = Vec::with_capacity(plan.len());
        let mut responses = Responses::new();
        for slot in plan {
            let read = slot.with_value(responder(slot))?;
            responses.push(slot.response_of(&read).expect("constructed from slot"));
            reads.push(read);
        }
        let (outputs, params) = self.resolve(params, input, &responses);
        Ok(Burst {
            params,
            reads,
            outputs: outputs.to_vec(),
        })
    }

    fn opposite_closed(&self, p: &ControllerParams, l: LockId, s: StreamSide, check_paddles: bool) -> bool {
        let opp = s.opposite();
        self.config.orientations().iter().all(|&o| {
            p.gate(l, opp, o) == Position::Closed && (!check_paddles || p.paddle(l, opp, o) == Position::Closed)
        })
    }

    fn gates_opened(&self, p: &ControllerParams, l: LockId, s: StreamSide) -> bool {
        self.config
            .orientations()
            .iter()
            .all(|&o| p.gate(l, s, o) == Position::Opened)
    }

    fn gate_open_guard(&self, p: &ControllerParams, l: LockId, s: StreamSide) -> bool {
        self.opposite_closed(p, l, s, true)
            && p.entering(l, s).is_red()
            && p.leaving(l, s) == SingleLight::Red
            && (p.water(l, s) || self.mutated(Mutation::DropWaterGuard))
            && !p.in_emergency(l)
    }

    fn barrier_lights_red(&self, p: &ControllerParams) -> bool {
        self.config
            .stream_sides()
            .iter()
            .all(|&s| p.barrier_light(s) == SingleLight::Red)
    }

    /// The inline reads `input` requires at `params`; empty when a stored
    /// guard already rejects the command or no reads are needed.
    pub fn plan(&self, p: &ControllerParams, input: &Action) -> Reads {
        let os = self.config.orientations();
        let mut reads = Reads::new();
        match *input {
            Action::GateCommand(l, s, ConsoleCommand::CommandOpen) if self.gate_open_guard(p, l, s) => {
                reads.extend(os.iter().map(|&o| ReadSlot::Entering(l, s, o)));
                reads.extend(os.iter().map(|&o| ReadSlot::Leaving(l, s, o)));
            }
            Action::EnteringTrafficLightCommand(l, s, DoubleLight::SingleGreen)
                if p.leaving(l, s) == SingleLight::Red && self.gates_opened(p, l, s) =>
            {
                reads.extend(os.iter().map(|&o| ReadSlot::Leaving(l, s, o)));
            }
            Action::LeavingTrafficLightCommand(l, s, SingleLight::Green)
                if p.entering(l, s).is_red() && self.gates_opened(p, l, s) =>
            {
                reads.extend(os.iter().map(|&o| ReadSlot::Entering(l, s, o)));
            }
            Action::BarrierCommand(ConsoleCommand::CommandOpen)
                if self.barrier_lights_red(p)
                    && !p.barrier_in_emergency
                    && !self.mutated(Mutation::BarrierOpenWithoutLightReads) =>
            {
                reads.extend(self.config.barrier_lights().map(|(s, o)| ReadSlot::Barrier(s, o)));
            }
            _ => {}
        }
        reads
    }

    fn single_shows_red(&self, response: u8) -> bool {
        match SingleLightStatus::ALL[response as usize] {
            SingleLightStatus::Show(SingleLight::Red) => true,
            SingleLightStatus::FailSingle => self.mutated(Mutation::FailSingleCountsAsRed),
            SingleLightStatus::Show(SingleLight::Green) => false,
        }
    }

    /// Outputs of the burst for `input` given the read responses, and the
    /// parameters at its end.
    pub fn resolve(&self, p: &ControllerParams, input: &Action, responses: &[u8]) -> (Outputs, ControllerParams) {
        let os = self.config.orientations();
        let sides = self.config.stream_sides();
        let mut out = Outputs::new();
        let mut n = *p;
        match *input {
            Action::Skip => {}
            Action::EmergencyLockCommand(l, EmergencyCommand::Activate) => {
                for &s in sides {
                    out.extend(
                        os.iter()
                            .map(|&o| Action::GateActuator(l, s, o, ActuatorCommand::DoEmergencyStop)),
                    );
                }
                for &s in sides {
                    out.extend(
                        os.iter()
                            .map(|&o| Action::PaddleActuator(l, s, o, ActuatorCommand::DoEmergencyStop)),
                    );
                }
                for &s in sides {
                    let aspect = emergency_aspect(p.entering(l, s));
                    out.extend(
                        os.iter()
                            .map(|&o| Action::EnteringTrafficLightActuator(l, s, o, aspect)),
                    );
                    n.entering_light_set[pair_index(l, s)] = aspect;
                }
                for &s in sides {
                    out.extend(
                        os.iter()
                            .map(|&o| Action::LeavingTrafficLightActuator(l, s, o, SingleLight::Red)),
                    );
                    n.leaving_light_set[pair_index(l, s)] = SingleLight::Red;
                }
                n.locks_in_emergency[l.ordinal()] = true;
            }
            Action::EmergencyLockCommand(l, EmergencyCommand::Deactivate) => {
                n.locks_in_emergency[l.ordinal()] = false;
            }
            Action::GateCommand(l, s, ConsoleCommand::CommandOpen) => {
                let k = os.len();
                if responses.len() == 2 * k && self.gate_open_guard(p, l, s) {
                    let entering_ok = responses[..k]
                        .iter()
                        .all(|&r| ENTERING_OPEN_OK.contains(&DoubleLightStatus::ALL[r as usize]));
                    let leaving_ok = responses[k..].iter().all(|&r| self.single_shows_red(r));
                    if entering_ok && leaving_ok {
                        for &o in os {
                            out.push(Action::GateActuator(l, s, o, ActuatorCommand::DoOpen));
                            n.gate_status[triple_index(l, s, o)] = Position::Opening;
                        }
                    }
                }
            }
            Action::GateCommand(l, s, ConsoleCommand::CommandClose) => {
                let lights_ok = self.mutated(Mutation::DropGateCloseGuard)
                    || (p.entering(l, s).is_red() && p.leaving(l, s) == SingleLight::Red);
                let calm = self.mutated(Mutation::DropGateCloseEmergencyCheck) || !p.in_emergency(l);
                if lights_ok && calm {
                    for &o in os {
                        out.push(Action::GateActuator(l, s, o, ActuatorCommand::DoClose));
                        n.gate_status[triple_index(l, s, o)] = Position::Closing;
                    }
                }
            }
            Action::GateCommand(l, s, ConsoleCommand::CommandStop) => {
                out.extend(
                    os.iter()
                        .map(|&o| Action::GateActuator(l, s, o, ActuatorCommand::DoEmergencyStop)),
                );
                out.extend(
                    os.iter()
                        .map(|&o| Action::EnteringTrafficLightActuator(l, s, o, DoubleLight::SingleRed)),
                );
                out.extend(
                    os.iter()
                        .map(|&o| Action::LeavingTrafficLightActuator(l, s, o, SingleLight::Red)),
                );
                n.entering_light_set[pair_index(l, s)] = DoubleLight::SingleRed;
                n.leaving_light_set[pair_index(l, s)] = SingleLight::Red;
            }
            Action::PaddleCommand(l, s, ConsoleCommand::CommandOpen) => {
                let clear = self.opposite_closed(p, l, s, !self.mutated(Mutation::DropOppositePaddleCheck));
                if clear && !p.in_emergency(l) {
                    for &o in os {
                        out.push(Action::PaddleActuator(l, s, o, ActuatorCommand::DoOpen));
                        n.paddle_status[triple_index(l, s, o)] = Position::Opening;
                    }
                }
            }
            Action::PaddleCommand(l, s, ConsoleCommand::CommandClose) => {
                if !p.in_emergency(l) {
                    for &o in os {
                        out.push(Action::PaddleActuator(l, s, o, ActuatorCommand::DoClose));
                        n.paddle_status[triple_index(l, s, o)] = Position::Closing;
                    }
                }
            }
            Action::PaddleCommand(l, s, ConsoleCommand::CommandStop) => {
                out.extend(
                    os.iter()
                        .map(|&o| Action::PaddleActuator(l, s, o, ActuatorCommand::DoEmergencyStop)),
                );
            }
            Action::GateSensor(l, s, o, pos) => {
                let slot = &mut n.gate_status[triple_index(l, s, o)];
                if let Some(end) = self.sensed(slot, pos) {
                    out.push(Action::GateActuator(l, s, o, end));
                }
            }
            Action::PaddleSensor(l, s, o, pos) => {
                let slot = &mut n.paddle_status[triple_index(l, s, o)];
                if let Some(end) = self.sensed(slot, pos) {
                    out.push(Action::PaddleActuator(l, s, o, end));
                }
            }
            Action::BarrierSensor(pos) => {
                if let Some(end) = self.sensed(&mut n.barrier_status, pos) {
                    out.push(Action::BarrierActuator(end));
                }
            }
            Action::WaterSensor(l, s, w) => {
                n.water_equal[pair_index(l, s)] = w == WaterLevel::Equal;
            }
            Action::EnteringTrafficLightCommand(l, s, c) => {
                let allowed = match c {
                    DoubleLight::SingleRed | DoubleLight::RedRed => true,
                    DoubleLight::RedGreen => {
                        self.mutated(Mutation::DropRedgreenGuard) || p.leaving(l, s) == SingleLight::Red
                    }
                    DoubleLight::SingleGreen => {
                        responses.len() == os.len()
                            && p.leaving(l, s) == SingleLight::Red
                            && self.gates_opened(p, l, s)
                            && responses.iter().all(|&r| self.single_shows_red(r))
                    }
                };
                if allowed {
                    out.extend(os.iter().map(|&o| Action::EnteringTrafficLightActuator(l, s, o, c)));
                    n.entering_light_set[pair_index(l, s)] = c;
                }
            }
            Action::LeavingTrafficLightCommand(l, s, c) => {
                let allowed = match c {
                    SingleLight::Red => true,
                    SingleLight::Green => responses.len() == os.len()
                        && p.entering(l, s).is_red()
                        && self.gates_opened(p, l, s)
                        && responses.iter().all(
                            |&r| matches!(DoubleLightStatus::ALL[r as usize], DoubleLightStatus::Show(d) if d.is_red()),
                        ),
                };
                if allowed {
                    out.extend(os.iter().map(|&o| Action::LeavingTrafficLightActuator(l, s, o, c)));
                    n.leaving_light_set[pair_index(l, s)] = c;
                }
            }
            Action::EmergencyBarrierCommand(EmergencyCommand::Activate) => {
                out.push(Action::BarrierActuator(ActuatorCommand::DoEmergencyStop));
                self.barrier_lights_to_red(&mut out, &mut n);
                n.barrier_in_emergency = true;
            }
            Action::EmergencyBarrierCommand(EmergencyCommand::Deactivate) => {
                n.barrier_in_emergency = false;
            }
            Action::BarrierCommand(ConsoleCommand::CommandOpen) => {
                if self.barrier_lights_red(p) && !p.barrier_in_emergency {
                    let lights_ok = if self.mutated(Mutation::BarrierOpenWithoutLightReads) {
                        true
                    } else {
                        let expected = self.config.barrier_lights().count();
                        responses.len() == expected && responses.iter().all(|&r| self.single_shows_red(r))
                    };
                    if lights_ok {
                        out.push(Action::BarrierActuator(ActuatorCommand::DoOpen));
                        n.barrier_status = Position::Opening;
                    }
                }
            }
            Action::BarrierCommand(ConsoleCommand::CommandClose) => {
                if self.barrier_lights_red(p) && !p.barrier_in_emergency {
                    out.push(Action::BarrierActuator(ActuatorCommand::DoClose));
                    n.barrier_status = Position::Closing;
                }
            }
            Action::BarrierCommand(ConsoleCommand::CommandStop) => {
                out.push(Action::BarrierActuator(ActuatorCommand::DoEmergencyStop));
                if !self.mutated(Mutation::SkipLightRedOnStop) {
                    self.barrier_lights_to_red(&mut out, &mut n);
                }
            }
            Action::BarrierTrafficLightCommand(s, c) => {
                if c == SingleLight::Red || p.barrier_status == Position::Opened {
                    out.extend(os.iter().map(|&o| Action::BarrierTrafficLightActuator(s, o, c)));
                    n.barrier_light_set[s.ordinal()] = c;
                }
            }
            // Not stable inputs; `step` and `run_burst` never get here.
            Action::GateActuator(..)
            | Action::PaddleActuator(..)
            | Action::BarrierActuator(..)
            | Action::EnteringTrafficLightActuator(..)
            | Action::LeavingTrafficLightActuator(..)
            | Action::BarrierTrafficLightActuator(..)
            | Action::EnteringTrafficLightSensor(..)
            | Action::LeavingTrafficLightSensor(..)
            | Action::BarrierTrafficLightSensor(..) => {}
        }
        (out, n)
    }

    fn barrier_lights_to_red(&self, out: &mut Outputs, n: &mut ControllerParams) {
        for (s, o) in self.config.barrier_lights() {
            out.push(Action::BarrierTrafficLightActuator(s, o, SingleLight::Red));
        }
        for &s in self.config.stream_sides() {
            n.barrier_light_set[s.ordinal()] = SingleLight::Red;
        }
    }

    /// Position reconciliation shared by gate, paddle and barrier sensors.
    fn sensed(&self, status: &mut Position, pos: SensorPosition) -> Option<ActuatorCommand> {
        use Position::*;
        match pos {
            SensorPosition::SenseOpen => {
                if matches!(*status, Opening | Opened) || self.mutated(Mutation::DropEndstopCondition) {
                    *status = Opened;
                    Some(ActuatorCommand::DoEndStopOpening)
                } else {
                    *status = Closing;
                    None
                }
            }
            SensorPosition::SenseClosed => {
                if matches!(*status, Closing | Closed) {
                    *status = Closed;
                    Some(ActuatorCommand::DoEndStopClosing)
                } else {
                    *status = Opening;
                    None
                }
            }
            SensorPosition::SenseIntermediate | SensorPosition::FailPosition => {
                *status = match *status {
                    Opened => Opening,
                    Closed => Closing,
                    other => other,
                };
                None
            }
        }
    }
}

/// Longest excursion away from a stable state, in transitions.
pub const MAX_BURST: usize = 24;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DoubleLightStatus as D;
    use crate::domain::SingleLightStatus as S;
    use LockId::*;
    use Orientation::*;
    use StreamSide::*;

    fn red_responder(slot: ReadSlot) -> Value {
        match slot {
            ReadSlot::Entering(..) => D::Show(DoubleLight::SingleRed).into(),
            _ => S::Show(SingleLight::Red).into(),
        }
    }

    fn burst(c: &Controller, p: &ControllerParams, a: &str) -> Burst {
        c.run_burst(p, &a.parse().unwrap(), red_responder).unwrap()
    }

    fn texts(actions: &[Action]) -> Vec<String> {
        actions.iter().map(|a| a.to_string()).collect()
    }

    #[test]
    fn initial_values() {
        let c = Controller::new(&PlantConfig::full());
        let s = c.initial_state();
        assert!(s.is_stable());
        assert_eq!(s.params.barrier_status, Position::Opened);
        assert!(s.params.gate_status.iter().all(|&g| g == Position::Closed));
        assert_eq!(s.params.gate_status.len(), 8);
        assert_eq!(s.params.locks_in_emergency, [false, false]);
    }

    #[test]
    fn emergency_burst_in_full_config() {
        let c = Controller::new(&PlantConfig::full());
        let b = burst(&c, &ControllerParams::initial(), "EmergencyLockCommand(north,activate)");
        assert_eq!(b.outputs.len(), 16);
        let stops = b.outputs[..8]
            .iter()
            .filter(|a| {
                matches!(
                    a,
                    Action::GateActuator(North, _, _, ActuatorCommand::DoEmergencyStop)
                        | Action::PaddleActuator(North, _, _, ActuatorCommand::DoEmergencyStop)
                )
            })
            .count();
        assert_eq!(stops, 8);
        assert!(b.outputs[8..12].iter().all(|a| matches!(
            a,
            Action::EnteringTrafficLightActuator(North, _, _, DoubleLight::SingleRed)
        )));
        assert!(b.outputs[12..]
            .iter()
            .all(|a| matches!(a, Action::LeavingTrafficLightActuator(North, _, _, SingleLight::Red))));
        assert!(b.params.in_emergency(North));
        assert!(!b.params.in_emergency(South));
    }

    #[test]
    fn sense_open_on_closed_gate() {
        let c = Controller::new(&PlantConfig::full());
        let b = burst(
            &c,
            &ControllerParams::initial(),
            "GateSensor(north,upstream,east,sense_open)",
        );
        assert!(b.outputs.is_empty());
        assert_eq!(b.params.gate(North, Upstream, East), Position::Closing);
    }

    #[test]
    fn barrier_close_at_init() {
        let c = Controller::new(&PlantConfig::full());
        let b = burst(&c, &ControllerParams::initial(), "BarrierCommand(command_close)");
        assert_eq!(texts(&b.outputs), ["BarrierActuator(do_close)"]);
        assert_eq!(b.params.barrier_status, Position::Closing);
    }

    #[test]
    fn single_green_rejected_at_init() {
        let c = Controller::new(&PlantConfig::full());
        let p = ControllerParams::initial();
        let b = burst(&c, &p, "EnteringTrafficLightCommand(north,upstream,single_green)");
        assert!(b.outputs.is_empty() && b.reads.is_empty());
        assert_eq!(b.params, p);
    }

    fn ready_to_open() -> ControllerParams {
        let mut p = ControllerParams::initial();
        p.water_equal[pair_index(North, Upstream)] = true;
        p
    }

    #[test]
    fn failed_leaving_read_blocks_gate_open() {
        let c = Controller::new(&PlantConfig::full());
        let mut s = ControllerState {
            params: ready_to_open(),
            mode: Mode::Stable,
        };
        let script = [
            "GateCommand(north,upstream,command_open)",
            "EnteringTrafficLightSensor(north,upstream,east,show(single_red))",
            "EnteringTrafficLightSensor(north,upstream,west,show(single_red))",
            "LeavingTrafficLightSensor(north,upstream,east,show(red))",
            "LeavingTrafficLightSensor(north,upstream,west,fail_single)",
        ];
        for a in script {
            s = c.step(&s, &a.parse().unwrap()).unwrap();
        }
        assert!(s.is_stable());
        assert_eq!(s.params, ready_to_open());
    }

    #[test]
    fn gate_open_reads_then_opens() {
        let c = Controller::new(&PlantConfig::full());
        let b = burst(&c, &ready_to_open(), "GateCommand(north,upstream,command_open)");
        assert_eq!(b.reads.len(), 4);
        assert_eq!(
            texts(&b.outputs),
            [
                "GateActuator(north,upstream,east,do_open)",
                "GateActuator(north,upstream,west,do_open)"
            ]
        );
        assert_eq!(b.params.gate(North, Upstream, West), Position::Opening);
    }

    #[test]
    fn gate_stop_outputs() {
        let c = Controller::new(&PlantConfig::full());
        let b = burst(
            &c,
            &ControllerParams::initial(),
            "GateCommand(north,upstream,command_stop)",
        );
        assert_eq!(
            texts(&b.outputs),
            [
                "GateActuator(north,upstream,east,do_emergencyStop)",
                "GateActuator(north,upstream,west,do_emergencyStop)",
                "EnteringTrafficLightActuator(north,upstream,east,single_red)",
                "EnteringTrafficLightActuator(north,upstream,west,single_red)",
                "LeavingTrafficLightActuator(north,upstream,east,red)",
                "LeavingTrafficLightActuator(north,upstream,west,red)",
            ]
        );
    }

    #[test]
    fn barrier_open_reads_four_lights() {
        let c = Controller::new(&PlantConfig::full());
        let b = burst(&c, &ControllerParams::initial(), "BarrierCommand(command_open)");
        assert_eq!(b.reads.len(), 4);
        assert_eq!(texts(&b.outputs), ["BarrierActuator(do_open)"]);
    }

    #[test]
    fn skip_is_a_no_op() {
        let c = Controller::new(&PlantConfig::full());
        let p = ControllerParams::initial();
        let b = burst(&c, &p, "skip");
        assert!(b.outputs.is_empty());
        assert_eq!(b.params, p);
    }

    #[test]
    fn enabled_sets() {
        let c = Controller::new(&PlantConfig::full());
        let init = c.initial_state();
        let stable = c.enabled(&init);
        assert!(stable.contains(&"WaterSensor(south,downstream,fail_water_sensor)".parse().unwrap()));
        assert!(!stable.iter().any(|a| a.kind().is_read() || a.is_output()));

        let s = ControllerState {
            params: ready_to_open(),
            mode: Mode::Awaiting {
                input: "GateCommand(north,upstream,command_open)".parse().unwrap(),
                responses: [0u8, 0].into_iter().collect(),
            },
        };
        let awaiting = texts(&c.enabled(&s));
        assert_eq!(
            awaiting,
            [
                "LeavingTrafficLightSensor(north,upstream,east,show(red))",
                "LeavingTrafficLightSensor(north,upstream,east,show(green))",
                "LeavingTrafficLightSensor(north,upstream,east,fail_single)",
            ]
        );

        let s = c.step(&init, &"BarrierCommand(command_stop)".parse().unwrap()).unwrap();
        assert_eq!(texts(&c.enabled(&s)), ["BarrierActuator(do_emergencyStop)"]);
    }

    #[test]
    fn stepping_a_disabled_action_is_an_error() {
        let c = Controller::new(&PlantConfig::reduced());
        let init = c.initial_state();
        let out: Action = "BarrierActuator(do_open)".parse().unwrap();
        assert!(matches!(c.step(&init, &out), Err(ControllerError::NotEnabled { .. })));
        let south: Action = "GateCommand(south,upstream,command_open)".parse().unwrap();
        assert!(c.step(&init, &south).is_err());
    }

    #[test]
    fn ill_typed_response_is_rejected() {
        let c = Controller::new(&PlantConfig::full());
        let err = c
            .run_burst(
                &ControllerParams::initial(),
                &"BarrierCommand(command_open)".parse().unwrap(),
                |_| D::FailDouble.into(),
            )
            .unwrap_err();
        assert!(matches!(err, ControllerError::IllTypedResponse { .. }));
    }

    #[test]
    fn emergency_maps_redgreen_to_redred() {
        let c = Controller::new(&PlantConfig::reduced());
        let mut p = ControllerParams::initial();
        p.entering_light_set[pair_index(North, Downstream)] = DoubleLight::RedGreen;
        let b = burst(&c, &p, "EmergencyLockCommand(north,activate)");
        assert_eq!(b.params.entering(North, Downstream), DoubleLight::RedRed);
        assert_eq!(b.params.entering(North, Upstream), DoubleLight::SingleRed);
    }

    #[test]
    fn mutations_parse_back() {
        for &m in Mutation::ALL {
            assert_eq!(m.name().parse::<Mutation>().unwrap(), m);
        }
    }
}
