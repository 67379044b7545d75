//! Plant identifiers, the data sorts exchanged with the controller and the
//! complete action alphabet (console inputs, actuator outputs, sensor inputs
//! and `skip`).

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use arrayvec::ArrayVec;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("invalid plant configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot parse `{text}`: {reason}")]
    Parse { text: String, reason: String },
    #[error("unknown action kind `{0}`")]
    UnknownKind(String),
    #[error("action `{0}` is not part of the configured plant")]
    NotInConfig(String),
    #[error("action index {index} out of range (alphabet has {size} actions)")]
    OutOfRange { index: usize, size: usize },
}

fn parse_error(text: &str, reason: impl Into<String>) -> DomainError {
    DomainError::Parse {
        text: text.to_string(),
        reason: reason.into(),
    }
}

macro_rules! literal_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn ordinal(self) -> usize {
                self as usize
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl std::str::FromStr for $name {
            type Err = $crate::domain::DomainError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim() {
                    $($text => Ok($name::$variant),)+
                    other => Err($crate::domain::DomainError::Parse {
                        text: other.to_string(),
                        reason: concat!("not a ", stringify!($name)).to_string(),
                    }),
                }
            }
        }
    };
}

pub(crate) use literal_enum;

literal_enum!(
    /// The two locks of the complex.
    LockId { North => "north", South => "south" }
);
literal_enum!(
    /// River side (upstream) or canal side (downstream).
    StreamSide { Upstream => "upstream", Downstream => "downstream" }
);
literal_enum!(Orientation { East => "east", West => "west" });
literal_enum!(ConsoleCommand {
    CommandOpen => "command_open",
    CommandClose => "command_close",
    CommandStop => "command_stop",
});
literal_enum!(EmergencyCommand { Activate => "activate", Deactivate => "deactivate" });
literal_enum!(ActuatorCommand {
    DoOpen => "do_open",
    DoClose => "do_close",
    DoEmergencyStop => "do_emergencyStop",
    DoEndStopClosing => "do_endStopClosing",
    DoEndStopOpening => "do_endStopOpening",
});
literal_enum!(SensorPosition {
    SenseOpen => "sense_open",
    SenseClosed => "sense_closed",
    SenseIntermediate => "sense_intermediate",
    FailPosition => "fail_position",
});
literal_enum!(
    /// Aspects of a single (leaving or barrier) traffic light.
    SingleLight { Red => "red", Green => "green" }
);
literal_enum!(
    /// Aspects of a double (entering) traffic light.
    DoubleLight {
        SingleRed => "single_red",
        SingleGreen => "single_green",
        RedRed => "redred",
        RedGreen => "redgreen",
    }
);
literal_enum!(WaterLevel {
    Equal => "equal",
    Unequal => "unequal",
    FailWaterSensor => "fail_water_sensor",
});

impl StreamSide {
    pub fn opposite(self) -> StreamSide {
        match self {
            StreamSide::Upstream => StreamSide::Downstream,
            StreamSide::Downstream => StreamSide::Upstream,
        }
    }
}

impl DoubleLight {
    /// Single red or red-red.
    pub fn is_red(self) -> bool {
        matches!(self, DoubleLight::SingleRed | DoubleLight::RedRed)
    }
}

/// Reading of a single light sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SingleLightStatus {
    Show(SingleLight),
    FailSingle,
}

/// Reading of a double light sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DoubleLightStatus {
    Show(DoubleLight),
    FailDouble,
}

impl SingleLightStatus {
    pub const ALL: &'static [SingleLightStatus] = &[
        SingleLightStatus::Show(SingleLight::Red),
        SingleLightStatus::Show(SingleLight::Green),
        SingleLightStatus::FailSingle,
    ];

    pub fn ordinal(self) -> usize {
        match self {
            SingleLightStatus::Show(l) => l.ordinal(),
            SingleLightStatus::FailSingle => 2,
        }
    }
}

impl DoubleLightStatus {
    pub const ALL: &'static [DoubleLightStatus] = &[
        DoubleLightStatus::Show(DoubleLight::SingleRed),
        DoubleLightStatus::Show(DoubleLight::SingleGreen),
        DoubleLightStatus::Show(DoubleLight::RedRed),
        DoubleLightStatus::Show(DoubleLight::RedGreen),
        DoubleLightStatus::FailDouble,
    ];

    pub fn ordinal(self) -> usize {
        match self {
            DoubleLightStatus::Show(l) => l.ordinal(),
            DoubleLightStatus::FailDouble => 4,
        }
    }
}

impl fmt::Display for SingleLightStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingleLightStatus::Show(l) => write!(f, "show({l})"),
            SingleLightStatus::FailSingle => f.write_str("fail_single"),
        }
    }
}

impl fmt::Display for DoubleLightStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DoubleLightStatus::Show(l) => write!(f, "show({l})"),
            DoubleLightStatus::FailDouble => f.write_str("fail_double"),
        }
    }
}

fn strip_show(s: &str) -> Option<&str> {
    s.strip_prefix("show(")?.strip_suffix(')').map(str::trim)
}

impl FromStr for SingleLightStatus {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "fail_single" {
            return Ok(SingleLightStatus::FailSingle);
        }
        strip_show(s)
            .ok_or_else(|| parse_error(s, "not a SingleLightStatus"))?
            .parse()
            .map(SingleLightStatus::Show)
    }
}

impl FromStr for DoubleLightStatus {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "fail_double" {
            return Ok(DoubleLightStatus::FailDouble);
        }
        strip_show(s)
            .ok_or_else(|| parse_error(s, "not a DoubleLightStatus"))?
            .parse()
            .map(DoubleLightStatus::Show)
    }
}

/// The sort of one action argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArgType {
    Lock,
    Side,
    Orientation,
    Console,
    Emergency,
    Actuator,
    SensorPosition,
    SingleLight,
    DoubleLight,
    SingleStatus,
    DoubleStatus,
    Water,
}

impl ArgType {
    /// Size of the unrestricted domain.
    pub fn size(self) -> usize {
        match self {
            ArgType::Lock | ArgType::Side | ArgType::Orientation => 2,
            ArgType::Console => 3,
            ArgType::Emergency => 2,
            ArgType::Actuator => 5,
            ArgType::SensorPosition => 4,
            ArgType::SingleLight => 2,
            ArgType::DoubleLight => 4,
            ArgType::SingleStatus => 3,
            ArgType::DoubleStatus => 5,
            ArgType::Water => 3,
        }
    }

    /// The values of this sort that exist under `config`, in ordinal order.
    pub fn domain(self, config: &PlantConfig) -> Vec<Value> {
        match self {
            ArgType::Lock => config.locks().iter().map(|&l| Value::Lock(l)).collect(),
            ArgType::Side => config.stream_sides().iter().map(|&s| Value::Side(s)).collect(),
            ArgType::Orientation => config.orientations().iter().map(|&o| Value::Orientation(o)).collect(),
            _ => self.full_domain(),
        }
    }

    pub fn full_domain(self) -> Vec<Value> {
        match self {
            ArgType::Lock => LockId::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::Side => StreamSide::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::Orientation => Orientation::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::Console => ConsoleCommand::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::Emergency => EmergencyCommand::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::Actuator => ActuatorCommand::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::SensorPosition => SensorPosition::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::SingleLight => SingleLight::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::DoubleLight => DoubleLight::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::SingleStatus => SingleLightStatus::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::DoubleStatus => DoubleLightStatus::ALL.iter().map(|&v| v.into()).collect(),
            ArgType::Water => WaterLevel::ALL.iter().map(|&v| v.into()).collect(),
        }
    }

    pub fn parse(self, text: &str) -> Result<Value, DomainError> {
        Ok(match self {
            ArgType::Lock => Value::Lock(text.parse()?),
            ArgType::Side => Value::Side(text.parse()?),
            ArgType::Orientation => Value::Orientation(text.parse()?),
            ArgType::Console => Value::Console(text.parse()?),
            ArgType::Emergency => Value::Emergency(text.parse()?),
            ArgType::Actuator => Value::Actuator(text.parse()?),
            ArgType::SensorPosition => Value::Position(text.parse()?),
            ArgType::SingleLight => Value::Single(text.parse()?),
            ArgType::DoubleLight => Value::Double(text.parse()?),
            ArgType::SingleStatus => Value::SingleStatus(text.parse()?),
            ArgType::DoubleStatus => Value::DoubleStatus(text.parse()?),
            ArgType::Water => Value::Water(text.parse()?),
        })
    }
}

/// One argument value of any sort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Lock(LockId),
    Side(StreamSide),
    Orientation(Orientation),
    Console(ConsoleCommand),
    Emergency(EmergencyCommand),
    Actuator(ActuatorCommand),
    Position(SensorPosition),
    Single(SingleLight),
    Double(DoubleLight),
    SingleStatus(SingleLightStatus),
    DoubleStatus(DoubleLightStatus),
    Water(WaterLevel),
}

impl Value {
    pub fn arg_type(self) -> ArgType {
        match self {
            Value::Lock(_) => ArgType::Lock,
            Value::Side(_) => ArgType::Side,
            Value::Orientation(_) => ArgType::Orientation,
            Value::Console(_) => ArgType::Console,
            Value::Emergency(_) => ArgType::Emergency,
            Value::Actuator(_) => ArgType::Actuator,
            Value::Position(_) => ArgType::SensorPosition,
            Value::Single(_) => ArgType::SingleLight,
            Value::Double(_) => ArgType::DoubleLight,
            Value::SingleStatus(_) => ArgType::SingleStatus,
            Value::DoubleStatus(_) => ArgType::DoubleStatus,
            Value::Water(_) => ArgType::Water,
        }
    }

    /// Position within the unrestricted domain of its sort.
    pub fn ordinal(self) -> usize {
        match self {
            Value::Lock(v) => v.ordinal(),
            Value::Side(v) => v.ordinal(),
            Value::Orientation(v) => v.ordinal(),
            Value::Console(v) => v.ordinal(),
            Value::Emergency(v) => v.ordinal(),
            Value::Actuator(v) => v.ordinal(),
            Value::Position(v) => v.ordinal(),
            Value::Single(v) => v.ordinal(),
            Value::Double(v) => v.ordinal(),
            Value::SingleStatus(v) => v.ordinal(),
            Value::DoubleStatus(v) => v.ordinal(),
            Value::Water(v) => v.ordinal(),
        }
    }

    /// Opposite stream side; other values are returned unchanged.
    pub fn opposite(self) -> Value {
        match self {
            Value::Side(s) => Value::Side(s.opposite()),
            other => other,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Lock(v) => v.fmt(f),
            Value::Side(v) => v.fmt(f),
            Value::Orientation(v) => v.fmt(f),
            Value::Console(v) => v.fmt(f),
            Value::Emergency(v) => v.fmt(f),
            Value::Actuator(v) => v.fmt(f),
            Value::Position(v) => v.fmt(f),
            Value::Single(v) => v.fmt(f),
            Value::Double(v) => v.fmt(f),
            Value::SingleStatus(v) => v.fmt(f),
            Value::DoubleStatus(v) => v.fmt(f),
            Value::Water(v) => v.fmt(f),
        }
    }
}

macro_rules! value_from {
    ($($ty:ty => $variant:ident),+ $(,)?) => {
        $(impl From<$ty> for Value {
            fn from(v: $ty) -> Self {
                Value::$variant(v)
            }
        })+
    };
}

value_from!(
    LockId => Lock,
    StreamSide => Side,
    Orientation => Orientation,
    ConsoleCommand => Console,
    EmergencyCommand => Emergency,
    ActuatorCommand => Actuator,
    SensorPosition => Position,
    SingleLight => Single,
    DoubleLight => Double,
    SingleLightStatus => SingleStatus,
    DoubleLightStatus => DoubleStatus,
    WaterLevel => Water,
);

/// Which part of the controller interface an action belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionClass {
    /// Console command (including emergency buttons).
    Command,
    /// Instruction sent to an actuator.
    Actuator,
    /// Position or water sensor report, accepted at any stable moment.
    Sensor,
    /// Traffic-light sensor, only read inline by a handler.
    LightSensor,
    Skip,
}

macro_rules! action_kinds {
    ($($kind:ident($($arg:ident),*) : $class:ident),+ $(,)?) => {
        /// The tag of an [`Action`].
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum ActionKind {
            $($kind),+
        }

        impl ActionKind {
            pub const ALL: &'static [ActionKind] = &[$(ActionKind::$kind),+];

            fn tag(self) -> &'static str {
                match self {
                    $(ActionKind::$kind => stringify!($kind)),+
                }
            }

            pub fn arg_types(self) -> &'static [ArgType] {
                match self {
                    $(ActionKind::$kind => &[$(ArgType::$arg),*]),+
                }
            }

            pub fn class(self) -> ActionClass {
                match self {
                    $(ActionKind::$kind => ActionClass::$class),+
                }
            }
        }
    };
}

action_kinds!(
    Skip() : Skip,
    GateCommand(Lock, Side, Console) : Command,
    PaddleCommand(Lock, Side, Console) : Command,
    EmergencyLockCommand(Lock, Emergency) : Command,
    BarrierCommand(Console) : Command,
    EmergencyBarrierCommand(Emergency) : Command,
    EnteringTrafficLightCommand(Lock, Side, DoubleLight) : Command,
    LeavingTrafficLightCommand(Lock, Side, SingleLight) : Command,
    BarrierTrafficLightCommand(Side, SingleLight) : Command,
    GateActuator(Lock, Side, Orientation, Actuator) : Actuator,
    PaddleActuator(Lock, Side, Orientation, Actuator) : Actuator,
    BarrierActuator(Actuator) : Actuator,
    EnteringTrafficLightActuator(Lock, Side, Orientation, DoubleLight) : Actuator,
    LeavingTrafficLightActuator(Lock, Side, Orientation, SingleLight) : Actuator,
    BarrierTrafficLightActuator(Side, Orientation, SingleLight) : Actuator,
    GateSensor(Lock, Side, Orientation, SensorPosition) : Sensor,
    PaddleSensor(Lock, Side, Orientation, SensorPosition) : Sensor,
    BarrierSensor(SensorPosition) : Sensor,
    WaterSensor(Lock, Side, Water) : Sensor,
    EnteringTrafficLightSensor(Lock, Side, Orientation, DoubleStatus) : LightSensor,
    LeavingTrafficLightSensor(Lock, Side, Orientation, SingleStatus) : LightSensor,
    BarrierTrafficLightSensor(Side, Orientation, SingleStatus) : LightSensor,
);

impl ActionKind {
    /// Name used in the textual action syntax.
    pub fn name(self) -> &'static str {
        match self {
            ActionKind::Skip => "skip",
            other => other.tag(),
        }
    }

    /// Inputs are everything the controller receives; outputs are actuator
    /// instructions.
    pub fn is_input(self) -> bool {
        self.class() != ActionClass::Actuator
    }

    pub fn is_output(self) -> bool {
        self.class() == ActionClass::Actuator
    }

    /// Inputs accepted while the controller is stable (everything except
    /// inline light-sensor reads).
    pub fn is_stable_input(self) -> bool {
        matches!(
            self.class(),
            ActionClass::Command | ActionClass::Sensor | ActionClass::Skip
        )
    }

    pub fn is_read(self) -> bool {
        self.class() == ActionClass::LightSensor
    }

    pub fn involves_barrier(self) -> bool {
        matches!(
            self,
            ActionKind::BarrierCommand
                | ActionKind::EmergencyBarrierCommand
                | ActionKind::BarrierTrafficLightCommand
                | ActionKind::BarrierActuator
                | ActionKind::BarrierTrafficLightActuator
                | ActionKind::BarrierSensor
                | ActionKind::BarrierTrafficLightSensor
        )
    }

    fn universe_bases() -> &'static [usize] {
        static BASES: OnceLock<Vec<usize>> = OnceLock::new();
        BASES.get_or_init(|| {
            let mut bases = Vec::with_capacity(ActionKind::ALL.len() + 1);
            let mut acc = 0;
            for kind in ActionKind::ALL {
                bases.push(acc);
                acc += kind.arg_types().iter().map(|t| t.size()).product::<usize>();
            }
            bases.push(acc);
            bases
        })
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActionKind {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        ActionKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| DomainError::UnknownKind(s.to_string()))
    }
}

/// Every event on the controller boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Skip,
    GateCommand(LockId, StreamSide, ConsoleCommand),
    PaddleCommand(LockId, StreamSide, ConsoleCommand),
    EmergencyLockCommand(LockId, EmergencyCommand),
    BarrierCommand(ConsoleCommand),
    EmergencyBarrierCommand(EmergencyCommand),
    EnteringTrafficLightCommand(LockId, StreamSide, DoubleLight),
    LeavingTrafficLightCommand(LockId, StreamSide, SingleLight),
    BarrierTrafficLightCommand(StreamSide, SingleLight),
    GateActuator(LockId, StreamSide, Orientation, ActuatorCommand),
    PaddleActuator(LockId, StreamSide, Orientation, ActuatorCommand),
    BarrierActuator(ActuatorCommand),
    EnteringTrafficLightActuator(LockId, StreamSide, Orientation, DoubleLight),
    LeavingTrafficLightActuator(LockId, StreamSide, Orientation, SingleLight),
    BarrierTrafficLightActuator(StreamSide, Orientation, SingleLight),
    GateSensor(LockId, StreamSide, Orientation, SensorPosition),
    PaddleSensor(LockId, StreamSide, Orientation, SensorPosition),
    BarrierSensor(SensorPosition),
    WaterSensor(LockId, StreamSide, WaterLevel),
    EnteringTrafficLightSensor(LockId, StreamSide, Orientation, DoubleLightStatus),
    LeavingTrafficLightSensor(LockId, StreamSide, Orientation, SingleLightStatus),
    BarrierTrafficLightSensor(StreamSide, Orientation, SingleLightStatus),
}

pub type Args = ArrayVec<Value, 4>;

fn args_of<const N: usize>(values: [Value; N]) -> Args {
    values.into_iter().collect()
}

impl Action {
    pub fn kind(&self) -> ActionKind {
        use Action as A;
        use ActionKind as K;
        match self {
            A::Skip => K::Skip,
            A::GateCommand(..) => K::GateCommand,
            A::PaddleCommand(..) => K::PaddleCommand,
            A::EmergencyLockCommand(..) => K::EmergencyLockCommand,
            A::BarrierCommand(..) => K::BarrierCommand,
            A::EmergencyBarrierCommand(..) => K::EmergencyBarrierCommand,
            A::EnteringTrafficLightCommand(..) => K::EnteringTrafficLightCommand,
            A::LeavingTrafficLightCommand(..) => K::LeavingTrafficLightCommand,
            A::BarrierTrafficLightCommand(..) => K::BarrierTrafficLightCommand,
            A::GateActuator(..) => K::GateActuator,
            A::PaddleActuator(..) => K::PaddleActuator,
            A::BarrierActuator(..) => K::BarrierActuator,
            A::EnteringTrafficLightActuator(..) => K::EnteringTrafficLightActuator,
            A::LeavingTrafficLightActuator(..) => K::LeavingTrafficLightActuator,
            A::BarrierTrafficLightActuator(..) => K::BarrierTrafficLightActuator,
            A::GateSensor(..) => K::GateSensor,
            A::PaddleSensor(..) => K::PaddleSensor,
            A::BarrierSensor(..) => K::BarrierSensor,
            A::WaterSensor(..) => K::WaterSensor,
            A::EnteringTrafficLightSensor(..) => K::EnteringTrafficLightSensor,
            A::LeavingTrafficLightSensor(..) => K::LeavingTrafficLightSensor,
            A::BarrierTrafficLightSensor(..) => K::BarrierTrafficLightSensor,
        }
    }

    pub fn args(&self) -> Args {
        use Action as A;
        match *self {
            A::Skip => Args::new(),
            A::GateCommand(l, s, c) | A::PaddleCommand(l, s, c) => args_of([l.into(), s.into(), c.into()]),
            A::EmergencyLockCommand(l, c) => args_of([l.into(), c.into()]),
            A::BarrierCommand(c) => args_of([c.into()]),
            A::EmergencyBarrierCommand(c) => args_of([c.into()]),
            A::EnteringTrafficLightCommand(l, s, c) => args_of([l.into(), s.into(), c.into()]),
            A::LeavingTrafficLightCommand(l, s, c) => args_of([l.into(), s.into(), c.into()]),
            A::BarrierTrafficLightCommand(s, c) => args_of([s.into(), c.into()]),
            A::GateActuator(l, s, o, c) | A::PaddleActuator(l, s, o, c) => {
                args_of([l.into(), s.into(), o.into(), c.into()])
            }
            A::BarrierActuator(c) => args_of([c.into()]),
            A::EnteringTrafficLightActuator(l, s, o, c) => args_of([l.into(), s.into(), o.into(), c.into()]),
            A::LeavingTrafficLightActuator(l, s, o, c) => args_of([l.into(), s.into(), o.into(), c.into()]),
            A::BarrierTrafficLightActuator(s, o, c) => args_of([s.into(), o.into(), c.into()]),
            A::GateSensor(l, s, o, p) | A::PaddleSensor(l, s, o, p) => {
                args_of([l.into(), s.into(), o.into(), p.into()])
            }
            A::BarrierSensor(p) => args_of([p.into()]),
            A::WaterSensor(l, s, w) => args_of([l.into(), s.into(), w.into()]),
            A::EnteringTrafficLightSensor(l, s, o, v) => args_of([l.into(), s.into(), o.into(), v.into()]),
            A::LeavingTrafficLightSensor(l, s, o, v) => args_of([l.into(), s.into(), o.into(), v.into()]),
            A::BarrierTrafficLightSensor(s, o, v) => args_of([s.into(), o.into(), v.into()]),
        }
    }

    /// Rebuilds an action from its tag and argument tuple.
    pub fn from_parts(kind: ActionKind, args: &[Value]) -> Result<Action, DomainError> {
        use Value as V;
        let bad = || {
            parse_error(
                &format!("{kind}{args:?}"),
                "argument tuple does not match the action signature",
            )
        };
        use ActionKind as K;
        Ok(match (kind, args) {
            (K::Skip, []) => Action::Skip,
            (K::GateCommand, [V::Lock(l), V::Side(s), V::Console(c)]) => Action::GateCommand(*l, *s, *c),
            (K::PaddleCommand, [V::Lock(l), V::Side(s), V::Console(c)]) => Action::PaddleCommand(*l, *s, *c),
            (K::EmergencyLockCommand, [V::Lock(l), V::Emergency(c)]) => Action::EmergencyLockCommand(*l, *c),
            (K::BarrierCommand, [V::Console(c)]) => Action::BarrierCommand(*c),
            (K::EmergencyBarrierCommand, [V::Emergency(c)]) => Action::EmergencyBarrierCommand(*c),
            (K::EnteringTrafficLightCommand, [V::Lock(l), V::Side(s), V::Double(c)]) => {
                Action::EnteringTrafficLightCommand(*l, *s, *c)
            }
            (K::LeavingTrafficLightCommand, [V::Lock(l), V::Side(s), V::Single(c)]) => {
                Action::LeavingTrafficLightCommand(*l, *s, *c)
            }
            (K::BarrierTrafficLightCommand, [V::Side(s), V::Single(c)]) => Action::BarrierTrafficLightCommand(*s, *c),
            (K::GateActuator, [V::Lock(l), V::Side(s), V::Orientation(o), V::Actuator(c)]) => {
                Action::GateActuator(*l, *s, *o, *c)
            }
            (K::PaddleActuator, [V::Lock(l), V::Side(s), V::Orientation(o), V::Actuator(c)]) => {
                Action::PaddleActuator(*l, *s, *o, *c)
            }
            (K::BarrierActuator, [V::Actuator(c)]) => Action::BarrierActuator(*c),
            (K::EnteringTrafficLightActuator, [V::Lock(l), V::Side(s), V::Orientation(o), V::Double(c)]) => {
                Action::EnteringTrafficLightActuator(*l, *s, *o, *c)
            }
            (K::LeavingTrafficLightActuator, [V::Lock(l), V::Side(s), V::Orientation(o), V::Single(c)]) => {
                Action::LeavingTrafficLightActuator(*l, *s, *o, *c)
            }
            (K::BarrierTrafficLightActuator, [V::Side(s), V::Orientation(o), V::Single(c)]) => {
                Action::BarrierTrafficLightActuator(*s, *o, *c)
            }
            (K::GateSensor, [V::Lock(l), V::Side(s), V::Orientation(o), V::Position(p)]) => {
                Action::GateSensor(*l, *s, *o, *p)
            }
            (K::PaddleSensor, [V::Lock(l), V::Side(s), V::Orientation(o), V::Position(p)]) => {
                Action::PaddleSensor(*l, *s, *o, *p)
            }
            (K::BarrierSensor, [V::Position(p)]) => Action::BarrierSensor(*p),
            (K::WaterSensor, [V::Lock(l), V::Side(s), V::Water(w)]) => Action::WaterSensor(*l, *s, *w),
            (K::EnteringTrafficLightSensor, [V::Lock(l), V::Side(s), V::Orientation(o), V::DoubleStatus(v)]) => {
                Action::EnteringTrafficLightSensor(*l, *s, *o, *v)
            }
            (K::LeavingTrafficLightSensor, [V::Lock(l), V::Side(s), V::Orientation(o), V::SingleStatus(v)]) => {
                Action::LeavingTrafficLightSensor(*l, *s, *o, *v)
            }
            (K::BarrierTrafficLightSensor, [V::Side(s), V::Orientation(o), V::SingleStatus(v)]) => {
                Action::BarrierTrafficLightSensor(*s, *o, *v)
            }
            _ => return Err(bad()),
        })
    }

    pub fn is_input(&self) -> bool {
        self.kind().is_input()
    }

    pub fn is_output(&self) -> bool {
        self.kind().is_output()
    }

    /// Whether every lock, side and orientation named by the action exists
    /// under `config`.
    pub fn fits(&self, config: &PlantConfig) -> bool {
        if self.kind().involves_barrier() && !config.include_barrier() {
            return false;
        }
        self.args().iter().all(|v| match v {
            Value::Lock(l) => config.has_lock(*l),
            Value::Orientation(o) => config.has_orientation(*o),
            _ => true,
        })
    }

    /// Index in the configuration-independent universe of all actions.
    pub fn universe_index(&self) -> usize {
        let kind = self.kind();
        let mut idx = 0;
        for v in self.args() {
            idx = idx * v.arg_type().size() + v.ordinal();
        }
        ActionKind::universe_bases()[kind as usize] + idx
    }

    pub fn universe_size() -> usize {
        *ActionKind::universe_bases().last().expect("nonempty")
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = self.kind();
        if kind == ActionKind::Skip {
            return f.write_str("skip");
        }
        write!(f, "{}(", kind.name())?;
        for (i, v) in self.args().iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

/// Splits `a,b(c,d),e` at top-level commas.
pub(crate) fn split_top_level(inner: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, ch) in inner.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(inner[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = inner[start..].trim();
    if !last.is_empty() || !parts.is_empty() {
        parts.push(last);
    }
    parts
}

/// Splits `Name(args)` into the name and the raw argument list.
pub(crate) fn split_call(text: &str) -> Option<(&str, &str)> {
    let text = text.trim();
    let open = text.find('(')?;
    let inner = text.strip_suffix(')')?;
    Some((text[..open].trim(), &inner[open + 1..]))
}

impl FromStr for Action {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "skip" {
            return Ok(Action::Skip);
        }
        let (name, inner) = split_call(s).ok_or_else(|| parse_error(s, "expected Kind(args)"))?;
        let kind: ActionKind = name.parse()?;
        if kind == ActionKind::Skip {
            return Err(parse_error(s, "skip takes no arguments"));
        }
        let raw = split_top_level(inner);
        let types = kind.arg_types();
        if raw.len() != types.len() {
            return Err(parse_error(
                s,
                format!("{} expects {} arguments, got {}", kind, types.len(), raw.len()),
            ));
        }
        let mut values = Args::new();
        for (t, text) in types.iter().zip(raw) {
            values.push(
                t.parse(text)
                    .map_err(|_| parse_error(s, format!("bad argument `{text}`")))?,
            );
        }
        Action::from_parts(kind, &values)
    }
}

/// Physical layout of the plant the controller governs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PlantConfig {
    locks: Vec<LockId>,
    stream_sides: Vec<StreamSide>,
    orientations: Vec<Orientation>,
    include_barrier: bool,
}

impl PlantConfig {
    pub fn new(
        locks: &[LockId],
        stream_sides: &[StreamSide],
        orientations: &[Orientation],
        include_barrier: bool,
    ) -> Result<Self, DomainError> {
        fn canonical<T: Ord + Copy>(items: &[T]) -> Option<Vec<T>> {
            let mut v = items.to_vec();
            v.sort();
            v.dedup();
            (v.len() == items.len() && !v.is_empty()).then_some(v)
        }
        let locks =
            canonical(locks).ok_or_else(|| DomainError::InvalidConfig("locks must be nonempty and distinct".into()))?;
        let orientations = canonical(orientations)
            .ok_or_else(|| DomainError::InvalidConfig("orientations must be nonempty and distinct".into()))?;
        let stream_sides = canonical(stream_sides)
            .filter(|s| s.len() == 2)
            .ok_or_else(|| DomainError::InvalidConfig("stream sides must be exactly upstream and downstream".into()))?;
        Ok(PlantConfig {
            locks,
            stream_sides,
            orientations,
            include_barrier,
        })
    }

    /// Both locks, both orientations and the barrier.
    pub fn full() -> Self {
        PlantConfig::new(LockId::ALL, StreamSide::ALL, Orientation::ALL, true).expect("valid")
    }

    /// One lock (north), both sides, one orientation (east), with barrier.
    pub fn reduced() -> Self {
        PlantConfig::new(&[LockId::North], StreamSide::ALL, &[Orientation::East], true).expect("valid")
    }

    pub fn locks(&self) -> &[LockId] {
        &self.locks
    }

    pub fn stream_sides(&self) -> &[StreamSide] {
        &self.stream_sides
    }

    pub fn orientations(&self) -> &[Orientation] {
        &self.orientations
    }

    pub fn include_barrier(&self) -> bool {
        self.include_barrier
    }

    pub fn has_lock(&self, l: LockId) -> bool {
        self.locks.contains(&l)
    }

    pub fn has_orientation(&self, o: Orientation) -> bool {
        self.orientations.contains(&o)
    }

    /// All configured (lock, side) pairs.
    pub fn lock_sides(&self) -> impl Iterator<Item = (LockId, StreamSide)> + '_ {
        self.locks
            .iter()
            .flat_map(move |&l| self.stream_sides.iter().map(move |&s| (l, s)))
    }

    /// All configured (lock, side, orientation) triples.
    pub fn triples(&self) -> impl Iterator<Item = (LockId, StreamSide, Orientation)> + '_ {
        self.lock_sides()
            .flat_map(move |(l, s)| self.orientations.iter().map(move |&o| (l, s, o)))
    }

    /// Barrier light positions (side, orientation); empty without barrier.
    pub fn barrier_lights(&self) -> impl Iterator<Item = (StreamSide, Orientation)> + '_ {
        let sides: &[StreamSide] = if self.include_barrier { &self.stream_sides } else { &[] };
        sides
            .iter()
            .flat_map(move |&s| self.orientations.iter().map(move |&o| (s, o)))
    }

    pub fn summary(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        format!(
            "locks={} orientations={} barrier={}",
            join(self.locks.iter().map(|l| l.to_string()).collect()),
            join(self.orientations.iter().map(|o| o.to_string()).collect()),
            self.include_barrier
        )
    }
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig::full()
    }
}

/// Dense index of (lock, side, orientation) into fixed 8-slot tables.
pub(crate) fn triple_index(l: LockId, s: StreamSide, o: Orientation) -> usize {
    l.ordinal() * 4 + s.ordinal() * 2 + o.ordinal()
}

/// Dense index of (lock, side) into fixed 4-slot tables.
pub(crate) fn pair_index(l: LockId, s: StreamSide) -> usize {
    l.ordinal() * 2 + s.ordinal()
}

/// Number of distinct instances of `kind` under `config`.
pub fn instances(config: &PlantConfig, kind: ActionKind) -> usize {
    if kind.involves_barrier() && !config.include_barrier() {
        return 0;
    }
    kind.arg_types().iter().map(|t| t.domain(config).len()).product()
}

/// Dense integer code of an action within a configuration's alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionId(pub u16);

impl ActionId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// The finite alphabet of a configuration with a bijective dense encoding.
/// `skip` always encodes to [`Alphabet::SKIP`].
#[derive(Debug, Clone)]
pub struct Alphabet {
    config: PlantConfig,
    actions: Vec<Action>,
    dense: Vec<u16>,
}

impl Alphabet {
    pub const SKIP: ActionId = ActionId(0);
    const ABSENT: u16 = u16::MAX;

    pub fn new(config: &PlantConfig) -> Self {
        let mut actions = Vec::new();
        for &kind in ActionKind::ALL {
            if instances(config, kind) == 0 {
                continue;
            }
            let domains: Vec<Vec<Value>> = kind.arg_types().iter().map(|t| t.domain(config)).collect();
            for combo in cartesian(&domains) {
                actions.push(Action::from_parts(kind, &combo).expect("well-typed by construction"));
            }
        }
        let mut dense = vec![Self::ABSENT; Action::universe_size()];
        for (i, a) in actions.iter().enumerate() {
            dense[a.universe_index()] = i as u16;
        }
        Alphabet {
            config: config.clone(),
            actions,
            dense,
        }
    }

    pub fn config(&self) -> &PlantConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn encode(&self, action: &Action) -> Result<ActionId, DomainError> {
        match self.dense[action.universe_index()] {
            Self::ABSENT => Err(DomainError::NotInConfig(action.to_string())),
            i => Ok(ActionId(i)),
        }
    }

    pub fn decode(&self, id: usize) -> Result<Action, DomainError> {
        self.actions.get(id).copied().ok_or(DomainError::OutOfRange {
            index: id,
            size: self.actions.len(),
        })
    }

    /// Unchecked decode for ids produced by [`Alphabet::encode`].
    pub fn get(&self, id: ActionId) -> Action {
        self.actions[id.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = ActionId> {
        (0..self.actions.len() as u16).map(ActionId)
    }
}

/// Cartesian product of value domains, last coordinate varying fastest.
pub(crate) fn cartesian(domains: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out: Vec<Vec<Value>> = vec![Vec::new()];
    for domain in domains {
        let mut next = Vec::with_capacity(out.len() * domain.len());
        for prefix in &out {
            for &v in domain {
                let mut row = prefix.clone();
                row.push(v);
                next.push(row);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn opposite_is_an_involution() {
        for &s in StreamSide::ALL {
            assert_ne!(s.opposite(), s);
            assert_eq!(s.opposite().opposite(), s);
        }
    }

    #[test]
    fn sort_sizes_match_the_data_table() {
        assert_eq!(SingleLightStatus::ALL.len(), 3);
        assert_eq!(DoubleLightStatus::ALL.len(), 5);
        assert_eq!(SensorPosition::ALL.len(), 4);
        assert_eq!(WaterLevel::ALL.len(), 3);
        assert_eq!(ActuatorCommand::ALL.len(), 5);
        let shown: std::collections::HashSet<_> =
            DoubleLight::ALL.iter().map(|&l| DoubleLightStatus::Show(l)).collect();
        assert_eq!(shown.len(), DoubleLight::ALL.len());
    }

    #[test]
    fn instance_counts() {
        let full = PlantConfig::full();
        assert_eq!(instances(&full, ActionKind::GateActuator), 40);
        assert_eq!(instances(&full, ActionKind::BarrierSensor), 4);
        let one = PlantConfig::new(&[LockId::North], StreamSide::ALL, &[Orientation::West], false).unwrap();
        assert_eq!(instances(&one, ActionKind::GateSensor), 8);
        assert_eq!(instances(&one, ActionKind::BarrierActuator), 0);
        assert!(matches!("Gate".parse::<ActionKind>(), Err(DomainError::UnknownKind(_))));
    }

    #[test]
    fn alphabet_size_is_the_sum_of_instances() {
        for config in [PlantConfig::full(), PlantConfig::reduced()] {
            let total: usize = ActionKind::ALL.iter().map(|&k| instances(&config, k)).sum();
            assert_eq!(Alphabet::new(&config).len(), total);
        }
        assert_eq!(Alphabet::new(&PlantConfig::full()).len(), Action::universe_size());
    }

    #[test]
    fn skip_has_a_reserved_code() {
        for config in [PlantConfig::full(), PlantConfig::reduced()] {
            assert_eq!(Alphabet::new(&config).encode(&Action::Skip).unwrap(), Alphabet::SKIP);
        }
    }

    #[test]
    fn encoding_is_injective_over_the_full_alphabet() {
        let alphabet = Alphabet::new(&PlantConfig::full());
        let actions = alphabet.actions();
        for (i, a) in actions.iter().enumerate() {
            for b in &actions[i + 1..] {
                assert_ne!(alphabet.encode(a).unwrap(), alphabet.encode(b).unwrap(), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn decode_rejects_out_of_range() {
        let alphabet = Alphabet::new(&PlantConfig::reduced());
        assert!(matches!(
            alphabet.decode(alphabet.len()),
            Err(DomainError::OutOfRange { .. })
        ));
        let south = Action::GateCommand(LockId::South, StreamSide::Upstream, ConsoleCommand::CommandOpen);
        assert!(alphabet.encode(&south).is_err());
    }

    #[test]
    fn text_syntax() {
        let a = Action::GateActuator(
            LockId::North,
            StreamSide::Upstream,
            Orientation::East,
            ActuatorCommand::DoOpen,
        );
        assert_eq!(a.to_string(), "GateActuator(north,upstream,east,do_open)");
        let r: Action = "LeavingTrafficLightSensor(north, upstream, east, show(red))"
            .parse()
            .unwrap();
        assert_eq!(
            r,
            Action::LeavingTrafficLightSensor(
                LockId::North,
                StreamSide::Upstream,
                Orientation::East,
                SingleLightStatus::Show(SingleLight::Red)
            )
        );
        assert_eq!("skip".parse::<Action>().unwrap(), Action::Skip);
        assert!("GateActuator(north,upstream,do_open)".parse::<Action>().is_err());
        assert!("GateActuator(north,upstream,east,open)".parse::<Action>().is_err());
        assert!("Bogus(north)".parse::<Action>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(PlantConfig::new(&[], StreamSide::ALL, Orientation::ALL, true).is_err());
        assert!(PlantConfig::new(LockId::ALL, &[StreamSide::Upstream], Orientation::ALL, false).is_err());
        assert!(PlantConfig::new(LockId::ALL, StreamSide::ALL, &[], true).is_err());
        let c = PlantConfig::new(
            &[LockId::South, LockId::North],
            StreamSide::ALL,
            &[Orientation::West],
            true,
        )
        .unwrap();
        assert_eq!(c.locks(), &[LockId::North, LockId::South]);
    }

    #[test]
    fn every_action_is_input_xor_output() {
        for a in Alphabet::new(&PlantConfig::full()).actions() {
            assert!(a.is_input() ^ a.is_output(), "{a}");
        }
    }

    proptest! {
        #[test]
        fn round_trip(idx in 0usize..359) {
            let alphabet = Alphabet::new(&PlantConfig::full());
            let a = alphabet.decode(idx).unwrap();
            prop_assert_eq!(alphabet.decode(alphabet.encode(&a).unwrap().index()).unwrap(), a);
            prop_assert_eq!(a.to_string().parse::<Action>().unwrap(), a);
        }
    }
}
