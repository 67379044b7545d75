//! The 53 requirements with their executable checks.

use std::fmt;
use std::str::FromStr;

use super::obligation::{ObligationSpec, SpecBuilder};
use super::predicate::Binding;
use super::safety::SafetyPattern;
use crate::domain::{DomainError, LockId, Orientation, PlantConfig, StreamSide, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Safety,
    Causality,
    Operator,
    Liveness,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Safety,
        Category::Causality,
        Category::Operator,
        Category::Liveness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Safety => "safety",
            Category::Causality => "causality",
            Category::Operator => "operator",
            Category::Liveness => "liveness",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckKind {
    /// One or more two-location pattern monitors.
    PatternMonitor,
    /// Burst obligations over observation variables.
    ObligationMonitor,
    /// Alternating reachability on the explored graph.
    GraphLiveness,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::PatternMonitor => "pattern-monitor",
            CheckKind::ObligationMonitor => "obligation-monitor",
            CheckKind::GraphLiveness => "graph-liveness",
        }
    }

    /// Whether a single trace can refute the requirement.
    pub fn is_trace_checkable(self) -> bool {
        self != CheckKind::GraphLiveness
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Requirement {
    pub id: &'static str,
    pub title: &'static str,
    pub category: Category,
    pub kind: CheckKind,
    /// Quantified parameters, one check instance per configured value.
    pub params: &'static [&'static str],
}

const fn req(
    id: &'static str,
    title: &'static str,
    category: Category,
    kind: CheckKind,
    params: &'static [&'static str],
) -> Requirement {
    Requirement {
        id,
        title,
        category,
        kind,
        params,
    }
}

use CheckKind::{GraphLiveness as G, ObligationMonitor as O, PatternMonitor as P};

const LSO: &[&str] = &["l", "s", "o"];
const LS: &[&str] = &["l", "s"];
const L: &[&str] = &["l"];
const S_O: &[&str] = &["s", "o"];
const NONE: &[&str] = &[];

static CATALOG: [Requirement; 53] = [
    req(
        "safreq1",
        "Opposing paddles cannot be both open simultaneously",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq2",
        "Paddles cannot open with an opposing gate open",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq3",
        "Gates cannot open with an opposing paddle open",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq4",
        "Gates cannot open with an opposing gate open",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq5",
        "Gates can only open if the waterlevel is equal",
        Category::Safety,
        P,
        LS,
    ),
    req(
        "safreq6",
        "Traffic lights at entering and leaving side I",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq13",
        "Traffic lights at entering and leaving side II",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq7",
        "Lights cannot be set to green if lock not open I",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq14",
        "Lights cannot be set to green if lock not open II",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq8",
        "Gates cannot be closed if the lights are not set to red I",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq9",
        "Gates cannot be closed if the lights are not set to red II",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq10",
        "Gates and paddles cannot move in emergency mode",
        Category::Safety,
        P,
        L,
    ),
    req(
        "safreq23",
        "End stop opening gate only if open",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq24",
        "End stop closing gate only if closed",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq27",
        "End stop opening paddle only if open",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq28",
        "End stop closing gate only if closed",
        Category::Safety,
        P,
        LSO,
    ),
    req(
        "safreq29",
        "Barrier only closes when lights are red",
        Category::Safety,
        P,
        S_O,
    ),
    req(
        "safreq30",
        "Barrier lights only become green when the barrier is open",
        Category::Safety,
        P,
        NONE,
    ),
    req(
        "safreq40",
        "The barrier cannot move in emergency mode",
        Category::Safety,
        P,
        NONE,
    ),
    req(
        "safreq35",
        "End stop opening barrier only if the barrier is open",
        Category::Safety,
        P,
        NONE,
    ),
    req(
        "safreq36",
        "End stop closing barrier only if the barrier is closed",
        Category::Safety,
        P,
        NONE,
    ),
    req("causreq11", "Emergency stop of a gate", Category::Causality, P, LSO),
    req("causreq12", "Emergency stop of a paddle", Category::Causality, P, LSO),
    req("causreq15", "Opening a gate", Category::Causality, P, LSO),
    req("causreq16", "Closing a gate", Category::Causality, P, LSO),
    req("causreq17", "Opening a paddle", Category::Causality, P, LSO),
    req("causreq18", "Closing a paddle", Category::Causality, P, LSO),
    req(
        "causreq19",
        "Setting the entering lights in a lock",
        Category::Causality,
        P,
        LSO,
    ),
    req(
        "causreq20",
        "Setting the leaving lights in a lock",
        Category::Causality,
        P,
        LSO,
    ),
    req(
        "causreq31",
        "Setting the lights of the barrier",
        Category::Causality,
        P,
        S_O,
    ),
    req("causreq32", "Opening the barrier", Category::Causality, P, NONE),
    req("causreq33", "Closing the barrier", Category::Causality, P, NONE),
    req("causreq34", "Stopping the barrier", Category::Causality, P, NONE),
    req(
        "commandreq1",
        "Close command for the barrier",
        Category::Operator,
        O,
        NONE,
    ),
    req(
        "commandreq2",
        "Open command for the barrier",
        Category::Operator,
        O,
        NONE,
    ),
    req(
        "commandreq3",
        "Stop command for the barrier",
        Category::Operator,
        O,
        NONE,
    ),
    req(
        "commandreq4",
        "Emergency command for the barrier",
        Category::Operator,
        O,
        NONE,
    ),
    req(
        "commandreq5",
        "Lights command for the barrier",
        Category::Operator,
        O,
        NONE,
    ),
    req("commandreq6", "Close command for gates", Category::Operator, O, LS),
    req("commandreq7", "Open command for gates", Category::Operator, O, LS),
    req("commandreq8", "Stop command for gates", Category::Operator, O, LS),
    req("commandreq9", "Close command for paddles", Category::Operator, O, LS),
    req("commandreq10", "Open command for paddles", Category::Operator, O, LS),
    req("commandreq11", "Stop command for paddles", Category::Operator, O, LS),
    req("commandreq12", "Emergency command for a lock", Category::Operator, O, L),
    req(
        "commandreq13",
        "Leaving lights commands for a lock",
        Category::Operator,
        O,
        LS,
    ),
    req(
        "commandreq14",
        "Entering lights commands for a lock",
        Category::Operator,
        O,
        LS,
    ),
    req(
        "livereq1",
        "The barrier can always be closed",
        Category::Liveness,
        G,
        NONE,
    ),
    req("livereq2", "Gates can always be closed", Category::Liveness, G, LS),
    req("livereq3", "Ships can pass", Category::Liveness, G, LS),
    req("livereq4", "Stopping gates prematurely", Category::Liveness, O, LS),
    req("livereq5", "Emergency stop of the lock", Category::Liveness, O, L),
    req("livereq6", "Emergency stop of the barrier", Category::Liveness, O, NONE),
];

pub fn catalog() -> &'static [Requirement] {
    &CATALOG
}

pub fn find(id: &str) -> Option<&'static Requirement> {
    CATALOG.iter().find(|r| r.id == id)
}

/// Resolves a comma-separated list of ids and the aliases `all`,
/// `all-safety`, `all-causality`, `all-operator` and `all-liveness`.
/// Duplicates are dropped; catalog order is kept.
pub fn select(spec: &str) -> Result<Vec<&'static Requirement>, DomainError> {
    let mut chosen = [false; 53];
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let hit: Vec<usize> = match part {
            "all" => (0..53).collect(),
            alias if alias.starts_with("all-") => {
                let cat = Category::ALL
                    .iter()
                    .find(|c| c.as_str() == &alias[4..])
                    .ok_or_else(|| DomainError::Parse {
                        text: alias.to_string(),
                        reason: "unknown requirement category".into(),
                    })?;
                (0..53).filter(|&i| CATALOG[i].category == *cat).collect()
            }
            id => vec![CATALOG
                .iter()
                .position(|r| r.id == id)
                .ok_or_else(|| DomainError::Parse {
                    text: id.to_string(),
                    reason: "unknown requirement id".into(),
                })?],
        };
        for i in hit {
            chosen[i] = true;
        }
    }
    Ok((0..53).filter(|&i| chosen[i]).map(|i| &CATALOG[i]).collect())
}

impl FromStr for Category {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| DomainError::Parse {
                text: s.to_string(),
                reason: "unknown category".into(),
            })
    }
}

fn pat(a: &str, b: &str, c: &str, initial: bool) -> SafetyPattern {
    SafetyPattern::parse(a, b, c, initial).unwrap_or_else(|e| panic!("catalog pattern: {e}"))
}

/// Pattern monitors of a safety or causality requirement. Empty for other
/// kinds.
pub fn patterns(id: &str) -> Vec<SafetyPattern> {
    let device_opposite = |sensed: &str, moved: &str, target: &str, initial: bool| {
        pat(
            &format!("{sensed}Sensor($l,~$s,$o,!sense_closed) || {sensed}Actuator($l,~$s,$o,do_open)"),
            &format!("{sensed}Sensor($l,~$s,$o,sense_closed)"),
            &format!("{moved}Actuator($l,$s,*,{target})"),
            initial,
        )
    };
    let end_stop = |dev: &str, sensed: &str, end: &str| {
        pat(
            &format!("{dev}Sensor($l,$s,$o,!{sensed})"),
            &format!("{dev}Sensor($l,$s,$o,{sensed})"),
            &format!("{dev}Actuator($l,$s,$o,{end})"),
            true,
        )
    };
    let since_command = |act: &str, cause: &str, effect: &str| {
        pat(
            &format!("{act}Actuator($l,$s,$o,*)"),
            cause,
            &format!("{act}Actuator($l,$s,$o,{effect})"),
            true,
        )
    };
    match id {
        "safreq1" => vec![device_opposite("Paddle", "Paddle", "do_open", false)],
        "safreq2" => vec![device_opposite("Gate", "Paddle", "do_open", false)],
        "safreq3" => vec![device_opposite("Paddle", "Gate", "do_open", false)],
        "safreq4" => vec![device_opposite("Gate", "Gate", "do_open", false)],
        "safreq5" => vec![pat(
            "WaterSensor($l,$s,unequal|fail_water_sensor)",
            "WaterSensor($l,$s,equal)",
            "GateActuator($l,$s,*,do_open)",
            true,
        )],
        "safreq6" => vec![pat(
            "LeavingTrafficLightSensor($l,$s,$o,show(green)|fail_single) || LeavingTrafficLightActuator($l,$s,$o,*)",
            "LeavingTrafficLightSensor($l,$s,$o,show(red))",
            "EnteringTrafficLightActuator($l,$s,*,single_green)",
            true,
        )],
        // Leaving green and a non-red entering set-point exclude each other,
        // whichever of the two is set last.
        "safreq13" => vec![
            pat(
                "EnteringTrafficLightActuator($l,$s,$o,single_green|redgreen)",
                "EnteringTrafficLightActuator($l,$s,$o,single_red|redred)",
                "LeavingTrafficLightActuator($l,$s,*,green)",
                false,
            ),
            pat(
                "LeavingTrafficLightActuator($l,$s,$o,green)",
                "LeavingTrafficLightActuator($l,$s,$o,red)",
                "EnteringTrafficLightActuator($l,$s,*,single_green|redgreen)",
                false,
            ),
        ],
        "safreq7" | "safreq14" => {
            let c = if id == "safreq7" {
                "EnteringTrafficLightActuator($l,$s,*,single_green)"
            } else {
                "LeavingTrafficLightActuator($l,$s,*,green)"
            };
            vec![pat(
                "GateSensor($l,$s,$o,!sense_open) || GateActuator($l,$s,$o,do_open|do_close)",
                "GateSensor($l,$s,$o,sense_open)",
                c,
                true,
            )]
        }
        "safreq8" => vec![pat(
            "EnteringTrafficLightActuator($l,$s,$o,single_green|redgreen)",
            "EnteringTrafficLightActuator($l,$s,$o,single_red|redred)",
            "GateActuator($l,$s,*,do_close)",
            false,
        )],
        "safreq9" => vec![pat(
            "LeavingTrafficLightActuator($l,$s,$o,green)",
            "LeavingTrafficLightActuator($l,$s,$o,red)",
            "GateActuator($l,$s,*,do_close)",
            false,
        )],
        "safreq10" => vec![pat(
            "EmergencyLockCommand($l,activate)",
            "EmergencyLockCommand($l,deactivate)",
            "GateActuator($l,*,*,do_open|do_close) || PaddleActuator($l,*,*,do_open|do_close)",
            false,
        )],
        // The second pattern: nothing but an opening instruction leads from a
        // closing gate to one that may be acknowledged as open.
        "safreq23" => vec![
            end_stop("Gate", "sense_open", "do_endStopOpening"),
            pat(
                "GateActuator($l,$s,$o,do_close)",
                "GateActuator($l,$s,$o,do_open)",
                "GateActuator($l,$s,$o,do_endStopOpening)",
                true,
            ),
        ],
        "safreq24" => vec![end_stop("Gate", "sense_closed", "do_endStopClosing")],
        "safreq27" => vec![
            end_stop("Paddle", "sense_open", "do_endStopOpening"),
            pat(
                "PaddleActuator($l,$s,$o,do_close)",
                "PaddleActuator($l,$s,$o,do_open)",
                "PaddleActuator($l,$s,$o,do_endStopOpening)",
                true,
            ),
        ],
        "safreq28" => vec![end_stop("Paddle", "sense_closed", "do_endStopClosing")],
        // Closing needs the lights set to red; opening needs them measured red.
        "safreq29" => vec![
            pat(
                "BarrierTrafficLightActuator($s,$o,green)",
                "BarrierTrafficLightActuator($s,$o,red)",
                "BarrierActuator(do_close)",
                false,
            ),
            pat(
                "BarrierTrafficLightSensor($s,$o,!show(red)) || BarrierTrafficLightActuator($s,$o,*)",
                "BarrierTrafficLightSensor($s,$o,show(red))",
                "BarrierActuator(do_open)",
                true,
            ),
        ],
        "safreq30" => vec![pat(
            "BarrierSensor(!sense_open) || BarrierActuator(do_open|do_close)",
            "BarrierSensor(sense_open)",
            "BarrierTrafficLightActuator(*,*,green)",
            false,
        )],
        "safreq40" => vec![pat(
            "EmergencyBarrierCommand(activate)",
            "EmergencyBarrierCommand(deactivate)",
            "BarrierActuator(do_open|do_close)",
            false,
        )],
        "safreq35" => vec![
            pat("BarrierSensor(!sense_open)", "BarrierSensor(sense_open)", "BarrierActuator(do_endStopOpening)", true),
            pat("BarrierActuator(do_close)", "BarrierActuator(do_open)", "BarrierActuator(do_endStopOpening)", false),
        ],
        "safreq36" => vec![pat(
            "BarrierSensor(!sense_closed)",
            "BarrierSensor(sense_closed)",
            "BarrierActuator(do_endStopClosing)",
            true,
        )],
        "causreq11" => vec![since_command(
            "Gate",
            "GateCommand($l,$s,command_stop) || EmergencyLockCommand($l,activate)",
            "do_emergencyStop",
        )],
        "causreq12" => vec![since_command(
            "Paddle",
            "PaddleCommand($l,$s,command_stop) || EmergencyLockCommand($l,activate)",
            "do_emergencyStop",
        )],
        "causreq15" => vec![since_command("Gate", "GateCommand($l,$s,command_open)", "do_open")],
        "causreq16" => vec![since_command("Gate", "GateCommand($l,$s,command_close)", "do_close")],
        "causreq17" => vec![since_command("Paddle", "PaddleCommand($l,$s,command_open)", "do_open")],
        "causreq18" => vec![since_command("Paddle", "PaddleCommand($l,$s,command_close)", "do_close")],
        "causreq19" => vec![
            since_command(
                "EnteringTrafficLight",
                "EnteringTrafficLightCommand($l,$s,single_red) || EmergencyLockCommand($l,activate) || GateCommand($l,$s,command_stop)",
                "single_red",
            ),
            since_command(
                "EnteringTrafficLight",
                "EnteringTrafficLightCommand($l,$s,redred) || EmergencyLockCommand($l,activate)",
                "redred",
            ),
            since_command("EnteringTrafficLight", "EnteringTrafficLightCommand($l,$s,redgreen)", "redgreen"),
            since_command("EnteringTrafficLight", "EnteringTrafficLightCommand($l,$s,single_green)", "single_green"),
        ],
        "causreq20" => vec![
            since_command(
                "LeavingTrafficLight",
                "LeavingTrafficLightCommand($l,$s,red) || EmergencyLockCommand($l,activate) || GateCommand($l,$s,command_stop)",
                "red",
            ),
            since_command("LeavingTrafficLight", "LeavingTrafficLightCommand($l,$s,green)", "green"),
        ],
        "causreq31" => vec![
            pat(
                "BarrierTrafficLightActuator($s,$o,*)",
                "BarrierTrafficLightCommand($s,red) || EmergencyBarrierCommand(activate) || BarrierCommand(command_stop)",
                "BarrierTrafficLightActuator($s,$o,red)",
                true,
            ),
            pat(
                "BarrierTrafficLightActuator($s,$o,*)",
                "BarrierTrafficLightCommand($s,green)",
                "BarrierTrafficLightActuator($s,$o,green)",
                true,
            ),
        ],
        "causreq32" => vec![pat("BarrierActuator(*)", "BarrierCommand(command_open)", "BarrierActuator(do_open)", true)],
        "causreq33" => vec![pat("BarrierActuator(*)", "BarrierCommand(command_close)", "BarrierActuator(do_close)", true)],
        "causreq34" => vec![pat(
            "BarrierActuator(*)",
            "BarrierCommand(command_stop) || EmergencyBarrierCommand(activate)",
            "BarrierActuator(do_emergencyStop)",
            true,
        )],
        _ => Vec::new(),
    }
}

/// After an emergency activation, lights of that lock or of the barrier are
/// never set to a green aspect before being set to red again. One pattern per
/// configured light.
pub fn emergency_light_patterns(config: &PlantConfig) -> Vec<(String, SafetyPattern)> {
    let mut out = Vec::new();
    for (l, s, o) in config.triples() {
        out.push((
            format!("entering({l},{s},{o})"),
            pat(
                &format!("EmergencyLockCommand({l},activate)"),
                &format!("EnteringTrafficLightActuator({l},{s},{o},single_red|redred)"),
                &format!("EnteringTrafficLightActuator({l},{s},{o},single_green|redgreen)"),
                false,
            ),
        ));
        out.push((
            format!("leaving({l},{s},{o})"),
            pat(
                &format!("EmergencyLockCommand({l},activate)"),
                &format!("LeavingTrafficLightActuator({l},{s},{o},red)"),
                &format!("LeavingTrafficLightActuator({l},{s},{o},green)"),
                false,
            ),
        ));
    }
    for (s, o) in config.barrier_lights() {
        out.push((
            format!("barrier({s},{o})"),
            pat(
                "EmergencyBarrierCommand(activate)",
                &format!("BarrierTrafficLightActuator({s},{o},red)"),
                &format!("BarrierTrafficLightActuator({s},{o},green)"),
                false,
            ),
        ));
    }
    out
}

fn b_expect<T, E: fmt::Display>(r: Result<T, E>) -> T {
    r.unwrap_or_else(|e| panic!("catalog obligation: {e}"))
}

/// Set-point observations of the entering and leaving lights at (l, s).
fn light_vars(b: &mut SpecBuilder, l: LockId, s: StreamSide) {
    b.var("ent_red", true).var("leave_red", true);
    b_expect(b.rule(
        &format!("EnteringTrafficLightActuator({l},{s},*,single_red|redred)"),
        &[],
        &["ent_red"],
        &[],
    ));
    b_expect(b.rule(
        &format!("EnteringTrafficLightActuator({l},{s},*,single_green|redgreen)"),
        &[],
        &[],
        &["ent_red"],
    ));
    b_expect(b.rule(
        &format!("LeavingTrafficLightActuator({l},{s},*,red)"),
        &[],
        &["leave_red"],
        &[],
    ));
    b_expect(b.rule(
        &format!("LeavingTrafficLightActuator({l},{s},*,green)"),
        &[],
        &[],
        &["leave_red"],
    ));
}

fn emergency_var(b: &mut SpecBuilder, l: LockId) {
    b.var("emergency", false);
    b_expect(b.rule(&format!("EmergencyLockCommand({l},activate)"), &[], &["emergency"], &[]));
    b_expect(b.rule(
        &format!("EmergencyLockCommand({l},deactivate)"),
        &[],
        &[],
        &["emergency"],
    ));
}

fn water_var(b: &mut SpecBuilder, l: LockId, s: StreamSide) {
    b.var("water", false);
    b_expect(b.rule(&format!("WaterSensor({l},{s},equal)"), &[], &["water"], &[]));
    b_expect(b.rule(
        &format!("WaterSensor({l},{s},unequal|fail_water_sensor)"),
        &[],
        &[],
        &["water"],
    ));
}

/// A gate or paddle is closing once instructed to close and closed once
/// sensed closed while closing. Returns the name of the closed variable.
fn closed_vars(b: &mut SpecBuilder, dev: &str, l: LockId, s: StreamSide, o: Orientation) -> String {
    let c = format!("{}_{s}_{o}_closing", dev.to_lowercase());
    let d = format!("{}_{s}_{o}_closed", dev.to_lowercase());
    b.var(&c, true).var(&d, true);
    b_expect(b.rule(&format!("{dev}Actuator({l},{s},{o},do_open)"), &[], &[], &[&c, &d]));
    b_expect(b.rule(&format!("{dev}Actuator({l},{s},{o},do_close)"), &[], &[&c], &[&d]));
    b_expect(b.rule(&format!("{dev}Sensor({l},{s},{o},sense_closed)"), &[&c], &[&d], &[]));
    b_expect(b.rule(&format!("{dev}Sensor({l},{s},{o},!sense_closed)"), &[], &[], &[&d]));
    d
}

/// Closed observations of the gates and paddles opposite (l, s).
fn opposite_closed(b: &mut SpecBuilder, config: &PlantConfig, l: LockId, s: StreamSide) -> Vec<String> {
    let mut closed = Vec::new();
    for &o in config.orientations() {
        closed.push(closed_vars(b, "Gate", l, s.opposite(), o));
        closed.push(closed_vars(b, "Paddle", l, s.opposite(), o));
    }
    closed
}

fn entering_revoked(l: LockId, s: StreamSide) -> String {
    format!("EnteringTrafficLightSensor({l},{s},*,!show(single_red)|show(redred)|show(redgreen))")
}

fn leaving_revoked(l: LockId, s: StreamSide) -> String {
    format!("LeavingTrafficLightSensor({l},{s},*,!show(red))")
}

/// Gates at (l, s) are open once sensed open after a valid, unrevoked open
/// command. Needs the light, water, emergency and opposite observations.
/// Returns the open variables, one per orientation.
fn gates_open_vars(
    b: &mut SpecBuilder,
    config: &PlantConfig,
    l: LockId,
    s: StreamSide,
    valid: &[String],
) -> Vec<String> {
    b.var("opening", false);
    let valid: Vec<&str> = valid.iter().map(String::as_str).collect();
    b_expect(b.rule(&format!("GateCommand({l},{s},command_open)"), &valid, &["opening"], &[]));
    b_expect(b.rule(
        &format!("GateCommand({l},{s},command_close|command_stop)"),
        &[],
        &[],
        &["opening"],
    ));
    let revoked = format!("{} || {}", entering_revoked(l, s), leaving_revoked(l, s));
    b_expect(b.rule(&revoked, &[], &[], &["opening"]));
    let mut open = Vec::new();
    for &o in config.orientations() {
        let v = format!("gate_{o}_open");
        b.var(&v, false);
        b_expect(b.rule(&format!("GateSensor({l},{s},{o},sense_open)"), &["opening"], &[&v], &[]));
        b_expect(b.rule(&format!("GateSensor({l},{s},{o},!sense_open)"), &[], &[], &[&v]));
        b_expect(b.rule(&format!("GateCommand({l},{s},*)"), &[], &[], &[&v]));
        b_expect(b.rule(&revoked, &[], &[], &[&v]));
        open.push(v);
    }
    open
}

/// Validity literals of an open command for the gates at (l, s).
fn open_guard(closed: &[String]) -> Vec<String> {
    let mut g: Vec<String> = closed.to_vec();
    g.extend(["ent_red", "leave_red", "water", "!emergency"].map(String::from));
    g
}

fn strs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Instantiated obligation specs of an operator requirement (and of the
/// liveness requirements checked as obligations), one per binding.
pub fn obligations(id: &str, config: &PlantConfig) -> Vec<(Binding, ObligationSpec)> {
    let os = config.orientations();
    let per_o = |f: &dyn Fn(Orientation) -> String| -> Vec<String> { os.iter().map(|&o| f(o)).collect() };
    let barrier_reds = || -> Vec<String> {
        config
            .barrier_lights()
            .map(|(s, o)| format!("BarrierTrafficLightActuator({s},{o},red)"))
            .collect()
    };
    let ls_binding =
        |l: LockId, s: StreamSide| -> Binding { vec![("l".into(), Value::Lock(l)), ("s".into(), Value::Side(s))] };
    let per_pair = |f: &dyn Fn(&mut SpecBuilder, LockId, StreamSide)| -> Vec<(Binding, ObligationSpec)> {
        config
            .lock_sides()
            .map(|(l, s)| {
                let mut b = SpecBuilder::new();
                f(&mut b, l, s);
                (ls_binding(l, s), b.build())
            })
            .collect()
    };
    let per_lock = |f: &dyn Fn(&mut SpecBuilder, LockId)| -> Vec<(Binding, ObligationSpec)> {
        config
            .locks()
            .iter()
            .map(|&l| {
                let mut b = SpecBuilder::new();
                f(&mut b, l);
                (vec![("l".into(), Value::Lock(l))], b.build())
            })
            .collect()
    };
    let single = |f: &dyn Fn(&mut SpecBuilder)| -> Vec<(Binding, ObligationSpec)> {
        if !config.include_barrier() {
            return Vec::new();
        }
        let mut b = SpecBuilder::new();
        f(&mut b);
        vec![(Vec::new(), b.build())]
    };
    let barrier_lights_vars = |b: &mut SpecBuilder| {
        b.var("up_red", true).var("down_red", true).var("emergency", false);
        for (s, v) in [("upstream", "up_red"), ("downstream", "down_red")] {
            b_expect(b.rule(&format!("BarrierTrafficLightActuator({s},*,red)"), &[], &[v], &[]));
            b_expect(b.rule(&format!("BarrierTrafficLightActuator({s},*,green)"), &[], &[], &[v]));
        }
        b_expect(b.rule("EmergencyBarrierCommand(activate)", &[], &["emergency"], &[]));
        b_expect(b.rule("EmergencyBarrierCommand(deactivate)", &[], &[], &["emergency"]));
    };
    match id {
        "commandreq1" => single(&|b| {
            barrier_lights_vars(b);
            b_expect(b.clause(
                "BarrierCommand(command_close)",
                &["up_red", "down_red", "!emergency"],
                &["BarrierActuator(do_close)".to_string()],
                "",
            ));
        }),
        "commandreq2" => single(&|b| {
            barrier_lights_vars(b);
            b_expect(b.clause(
                "BarrierCommand(command_open)",
                &["up_red", "down_red", "!emergency"],
                &["BarrierActuator(do_open)".to_string()],
                "BarrierTrafficLightSensor(*,*,!show(red))",
            ));
        }),
        "commandreq3" | "commandreq4" | "livereq6" => single(&|b| {
            let trigger = if id == "commandreq3" {
                "BarrierCommand(command_stop)"
            } else {
                "EmergencyBarrierCommand(activate)"
            };
            let mut items = barrier_reds();
            if id != "livereq6" {
                items.insert(0, "BarrierActuator(do_emergencyStop)".to_string());
            }
            b_expect(b.clause(trigger, &[], &items, ""));
        }),
        "commandreq5" => single(&|b| {
            barrier_lights_vars(b);
            b.var("barrier_opening", false).var("barrier_open", false);
            let valid = ["up_red", "down_red", "!emergency"];
            b_expect(b.rule("BarrierCommand(command_open)", &valid, &["barrier_opening"], &[]));
            for invalid in ["!up_red", "!down_red", "emergency"] {
                b_expect(b.rule("BarrierCommand(command_open)", &[invalid], &[], &["barrier_opening"]));
            }
            b_expect(b.rule(
                "BarrierCommand(command_close|command_stop)",
                &[],
                &[],
                &["barrier_opening"],
            ));
            b_expect(b.rule("BarrierCommand(*)", &[], &[], &["barrier_open"]));
            b_expect(b.rule(
                "BarrierTrafficLightSensor(*,*,!show(red))",
                &[],
                &[],
                &["barrier_opening", "barrier_open"],
            ));
            b_expect(b.rule(
                "BarrierSensor(sense_open)",
                &["barrier_opening"],
                &["barrier_open"],
                &[],
            ));
            b_expect(b.rule("BarrierSensor(!sense_open)", &[], &[], &["barrier_open"]));
            for &s in config.stream_sides() {
                let red: Vec<String> = per_o(&|o| format!("BarrierTrafficLightActuator({s},{o},red)"));
                let green: Vec<String> = per_o(&|o| format!("BarrierTrafficLightActuator({s},{o},green)"));
                b_expect(b.clause(&format!("BarrierTrafficLightCommand({s},red)"), &[], &red, ""));
                b_expect(b.clause(
                    &format!("BarrierTrafficLightCommand({s},green)"),
                    &["barrier_open"],
                    &green,
                    "",
                ));
            }
        }),
        "commandreq6" => per_pair(&|b, l, s| {
            light_vars(b, l, s);
            emergency_var(b, l);
            let items = per_o(&|o| format!("GateActuator({l},{s},{o},do_close)"));
            b_expect(b.clause(
                &format!("GateCommand({l},{s},command_close)"),
                &["ent_red", "leave_red", "!emergency"],
                &items,
                "",
            ));
        }),
        "commandreq7" => per_pair(&|b, l, s| {
            let closed = opposite_closed(b, config, l, s);
            light_vars(b, l, s);
            water_var(b, l, s);
            emergency_var(b, l);
            let guard = open_guard(&closed);
            let items = per_o(&|o| format!("GateActuator({l},{s},{o},do_open)"));
            b_expect(b.clause(
                &format!("GateCommand({l},{s},command_open)"),
                &strs(&guard),
                &items,
                &format!("{} || {}", entering_revoked(l, s), leaving_revoked(l, s)),
            ));
        }),
        "commandreq8" => per_pair(&|b, l, s| {
            let mut items = per_o(&|o| format!("GateActuator({l},{s},{o},do_emergencyStop)"));
            items.extend(per_o(&|o| {
                format!("EnteringTrafficLightActuator({l},{s},{o},single_red|redred)")
            }));
            items.extend(per_o(&|o| format!("LeavingTrafficLightActuator({l},{s},{o},red)")));
            b_expect(b.clause(&format!("GateCommand({l},{s},command_stop)"), &[], &items, ""));
        }),
        "commandreq9" => per_pair(&|b, l, s| {
            emergency_var(b, l);
            let items = per_o(&|o| format!("PaddleActuator({l},{s},{o},do_close)"));
            b_expect(b.clause(
                &format!("PaddleCommand({l},{s},command_close)"),
                &["!emergency"],
                &items,
                "",
            ));
        }),
        "commandreq10" => per_pair(&|b, l, s| {
            let mut guard = opposite_closed(b, config, l, s);
            emergency_var(b, l);
            guard.push("!emergency".into());
            let items = per_o(&|o| format!("PaddleActuator({l},{s},{o},do_open)"));
            b_expect(b.clause(
                &format!("PaddleCommand({l},{s},command_open)"),
                &strs(&guard),
                &items,
                "",
            ));
        }),
        "commandreq11" => per_pair(&|b, l, s| {
            let items = per_o(&|o| format!("PaddleActuator({l},{s},{o},do_emergencyStop)"));
            b_expect(b.clause(&format!("PaddleCommand({l},{s},command_stop)"), &[], &items, ""));
        }),
        "commandreq12" | "livereq5" => per_lock(&|b, l| {
            let mut items = Vec::new();
            if id == "commandreq12" {
                for dev in ["Gate", "Paddle"] {
                    for &s in config.stream_sides() {
                        items.extend(per_o(&|o| format!("{dev}Actuator({l},{s},{o},do_emergencyStop)")));
                    }
                }
            }
            for &s in config.stream_sides() {
                items.extend(per_o(&|o| {
                    format!("EnteringTrafficLightActuator({l},{s},{o},single_red|redred)")
                }));
                items.extend(per_o(&|o| format!("LeavingTrafficLightActuator({l},{s},{o},red)")));
            }
            b_expect(b.clause(&format!("EmergencyLockCommand({l},activate)"), &[], &items, ""));
        }),
        "commandreq13" => per_pair(&|b, l, s| {
            let closed = opposite_closed(b, config, l, s);
            light_vars(b, l, s);
            water_var(b, l, s);
            emergency_var(b, l);
            let open = gates_open_vars(b, config, l, s, &open_guard(&closed));
            let red = per_o(&|o| format!("LeavingTrafficLightActuator({l},{s},{o},red)"));
            b_expect(b.clause(&format!("LeavingTrafficLightCommand({l},{s},red)"), &[], &red, ""));
            let mut cond = open.clone();
            cond.push("ent_red".into());
            let green = per_o(&|o| format!("LeavingTrafficLightActuator({l},{s},{o},green)"));
            b_expect(b.clause(
                &format!("LeavingTrafficLightCommand({l},{s},green)"),
                &strs(&cond),
                &green,
                &format!("EnteringTrafficLightSensor({l},{s},*,!show(single_red)|show(redred))"),
            ));
        }),
        "commandreq14" => per_pair(&|b, l, s| {
            let closed = opposite_closed(b, config, l, s);
            light_vars(b, l, s);
            water_var(b, l, s);
            emergency_var(b, l);
            let open = gates_open_vars(b, config, l, s, &open_guard(&closed));
            for aspect in ["single_red", "redred"] {
                let items = per_o(&|o| format!("EnteringTrafficLightActuator({l},{s},{o},{aspect})"));
                b_expect(b.clause(
                    &format!("EnteringTrafficLightCommand({l},{s},{aspect})"),
                    &[],
                    &items,
                    "",
                ));
            }
            let items = per_o(&|o| format!("EnteringTrafficLightActuator({l},{s},{o},redgreen)"));
            b_expect(b.clause(
                &format!("EnteringTrafficLightCommand({l},{s},redgreen)"),
                &["leave_red"],
                &items,
                "",
            ));
            let mut cond = open.clone();
            cond.push("leave_red".into());
            let items = per_o(&|o| format!("EnteringTrafficLightActuator({l},{s},{o},single_green)"));
            b_expect(b.clause(
                &format!("EnteringTrafficLightCommand({l},{s},single_green)"),
                &strs(&cond),
                &items,
                &leaving_revoked(l, s),
            ));
        }),
        "livereq4" => per_pair(&|b, l, s| {
            b.var("ent_redgreen", false);
            b_expect(b.rule(
                &format!("EnteringTrafficLightActuator({l},{s},*,redgreen)"),
                &[],
                &["ent_redgreen"],
                &[],
            ));
            b_expect(b.rule(
                &format!("EnteringTrafficLightActuator({l},{s},*,!redgreen)"),
                &[],
                &[],
                &["ent_redgreen"],
            ));
            let items = per_o(&|o| format!("EnteringTrafficLightActuator({l},{s},{o},single_red)"));
            b_expect(b.clause(
                &format!("GateCommand({l},{s},command_stop)"),
                &["ent_redgreen"],
                &items,
                "",
            ));
        }),
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Alphabet;

    #[test]
    fn counts_by_category() {
        let count = |c: Category| catalog().iter().filter(|r| r.category == c).count();
        assert_eq!(Category::ALL.map(count), [21, 12, 14, 6],);
        let mut ids: Vec<&str> = catalog().iter().map(|r| r.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 53);
    }

    #[test]
    fn every_entry_has_a_check() {
        for config in [PlantConfig::full(), PlantConfig::reduced()] {
            let alphabet = Alphabet::new(&config);
            for r in catalog() {
                match r.kind {
                    CheckKind::PatternMonitor => {
                        let ps = patterns(r.id);
                        assert!(!ps.is_empty(), "{}", r.id);
                        for p in ps {
                            let m = p.compile(&alphabet).unwrap();
                            let vars: Vec<String> = p.variables().unwrap().into_iter().map(|(n, _)| n).collect();
                            assert_eq!(vars, r.params, "{}", r.id);
                            assert!(!m.bindings().is_empty());
                        }
                    }
                    CheckKind::ObligationMonitor => {
                        let obs = obligations(r.id, &config);
                        assert!(!obs.is_empty(), "{}", r.id);
                        for (binding, spec) in obs {
                            let names: Vec<&str> = binding.iter().map(|(n, _)| n.as_str()).collect();
                            assert_eq!(names, r.params, "{}", r.id);
                            spec.compile(&alphabet).unwrap();
                        }
                    }
                    CheckKind::GraphLiveness => assert!(r.category == Category::Liveness),
                }
            }
        }
    }

    #[test]
    fn observation_variable_counts() {
        let full = PlantConfig::full();
        let vars = |id: &str| obligations(id, &full)[0].1.vars.len();
        assert_eq!(vars("commandreq7"), 12);
        assert_eq!(vars("commandreq13"), 15);
        assert_eq!(vars("commandreq14"), 15);
        assert_eq!(vars("commandreq5"), 5);
    }

    #[test]
    fn gate_emergency_stop_pattern_shape() {
        let p = &patterns("causreq11")[0];
        assert_eq!(p.a.to_string(), "GateActuator($l,$s,$o,*)");
        assert_eq!(
            p.b.to_string(),
            "GateCommand($l,$s,command_stop) || EmergencyLockCommand($l,activate)"
        );
        assert_eq!(p.c.to_string(), "GateActuator($l,$s,$o,do_emergencyStop)");
        assert_eq!(find("livereq1").unwrap().kind, CheckKind::GraphLiveness);
    }

    #[test]
    fn selection() {
        assert_eq!(select("all").unwrap().len(), 53);
        assert_eq!(select("all-safety").unwrap().len(), 21);
        assert_eq!(select("all-safety,all-causality").unwrap().len(), 33);
        assert_eq!(select("safreq5, safreq5,livereq1").unwrap().len(), 2);
        assert!(select("safreq99").is_err());
        assert!(select("all-bogus").is_err());
        assert!(select("").unwrap().is_empty());
    }

    #[test]
    fn emergency_light_patterns_cover_every_light() {
        assert_eq!(emergency_light_patterns(&PlantConfig::full()).len(), 8 + 8 + 4);
        assert_eq!(emergency_light_patterns(&PlantConfig::reduced()).len(), 2 + 2 + 2);
    }
}
