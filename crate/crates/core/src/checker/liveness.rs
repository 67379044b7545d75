//! Alternating reachability of a goal on the explored graph.
//!
//! At a stable node the operator picks an allowed input, or waits for a
//! sensor to report. A universal sensor or read counts only if every value it
//! may report keeps the goal reachable; an essential one needs only its
//! designated value to. A node wins iff it can reach a goal edge this way.

use super::explore::StateGraph;
use super::CheckerError;
use crate::controller::{ControllerParams, Position};
use crate::domain::{
    Action, DoubleLightStatus, LockId, Orientation, PlantConfig, SensorPosition, SingleLightStatus, StreamSide,
    WaterLevel,
};
use crate::monitor::predicate::PredicateSet;

/// The value an essential class is relied upon to report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Designated {
    /// Any report matching the predicate.
    Value(PredicateSet),
    /// A light shows what it was last set to.
    TruthfulLight,
    /// A gate or paddle reports closed while it is closing or closed.
    ClosedWhenClosing,
    /// The water level is reported equal while a paddle at that side is
    /// opening or open.
    EqualWhenPaddleOpen,
}

impl Designated {
    fn holds(&self, p: &ControllerParams, a: &Action) -> bool {
        let closing = |pos: Position| matches!(pos, Position::Closing | Position::Closed);
        match (self, *a) {
            (Designated::Value(set), _) => set.matches(a),
            (Designated::TruthfulLight, Action::EnteringTrafficLightSensor(l, s, _, st)) => {
                st == DoubleLightStatus::Show(p.entering(l, s))
            }
            (Designated::TruthfulLight, Action::LeavingTrafficLightSensor(l, s, _, st)) => {
                st == SingleLightStatus::Show(p.leaving(l, s))
            }
            (Designated::TruthfulLight, Action::BarrierTrafficLightSensor(s, _, st)) => {
                st == SingleLightStatus::Show(p.barrier_light(s))
            }
            (Designated::ClosedWhenClosing, Action::GateSensor(l, s, o, v)) => {
                v == SensorPosition::SenseClosed && closing(p.gate(l, s, o))
            }
            (Designated::ClosedWhenClosing, Action::PaddleSensor(l, s, o, v)) => {
                v == SensorPosition::SenseClosed && closing(p.paddle(l, s, o))
            }
            (Designated::EqualWhenPaddleOpen, Action::WaterSensor(l, s, v)) => {
                v == WaterLevel::Equal
                    && Orientation::ALL
                        .iter()
                        .any(|&o| matches!(p.paddle(l, s, o), Position::Opening | Position::Opened))
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Essential {
    pub class: PredicateSet,
    pub designated: Designated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LivenessSpec {
    pub name: String,
    /// Edges whose label contains a matching action reach the goal.
    pub goal: PredicateSet,
    /// Inputs the operator or controller may choose freely.
    pub allowed: PredicateSet,
    /// Sensor reports and reads whose value does not matter.
    pub universal: PredicateSet,
    pub essential: Vec<Essential>,
}

impl LivenessSpec {
    fn role(&self, a: &Action) -> Result<Role, CheckerError> {
        let ess = self.essential.iter().position(|e| e.class.matches(a));
        let uni = self.universal.matches(a);
        match (uni, ess) {
            (true, Some(_)) => Err(CheckerError::OverlappingClasses(a.to_string())),
            (true, None) => Ok(Role::Universal),
            (false, Some(i)) => Ok(Role::Essential(i)),
            (false, None) if self.allowed.matches(a) => Ok(Role::Allowed),
            (false, None) => Ok(Role::Unusable),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Allowed,
    Universal,
    Essential(usize),
    Unusable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LivenessVerdict {
    pub winning: usize,
    pub nodes: usize,
    /// Shortest path to a losing node, when there is one.
    pub losing_path: Option<Vec<Action>>,
    pub sweeps: usize,
}

impl LivenessVerdict {
    pub fn holds(&self) -> bool {
        self.winning == self.nodes
    }
}

/// Stable inputs with the same device form one sensor group.
fn group_key(a: &Action) -> Option<Action> {
    use Action as A;
    Some(match *a {
        A::GateSensor(l, s, o, _) => A::GateSensor(l, s, o, SensorPosition::SenseOpen),
        A::PaddleSensor(l, s, o, _) => A::PaddleSensor(l, s, o, SensorPosition::SenseOpen),
        A::BarrierSensor(_) => A::BarrierSensor(SensorPosition::SenseOpen),
        A::WaterSensor(l, s, _) => A::WaterSensor(l, s, WaterLevel::Equal),
        _ => return None,
    })
}

/// Requires an exhaustive graph.
pub fn check_liveness(g: &StateGraph, spec: &LivenessSpec) -> Result<LivenessVerdict, CheckerError> {
    if !g.is_exhaustive() {
        return Err(CheckerError::NotExhaustive);
    }
    check_liveness_within(g, spec)
}

/// Unexpanded frontier nodes of a partial graph lose.
pub fn check_liveness_within(g: &StateGraph, spec: &LivenessSpec) -> Result<LivenessVerdict, CheckerError> {
    let alphabet = g.alphabet();
    let goal: Vec<bool> = (0..g.label_count() as u32)
        .map(|l| g.label(l).iter().any(|&id| spec.goal.matches(&alphabet.get(id))))
        .collect();
    // Stable edges follow the input order; group them.
    let inputs: Vec<Action> = g.stable_inputs().iter().map(|&id| alphabet.get(id)).collect();
    let roles: Vec<Role> = inputs.iter().map(|a| spec.role(a)).collect::<Result<_, _>>()?;
    let mut groups: Vec<(Role, Vec<usize>)> = Vec::new();
    for (k, a) in inputs.iter().enumerate() {
        match (roles[k], group_key(a)) {
            (Role::Unusable, _) => {}
            (Role::Allowed, _) | (_, None) => groups.push((roles[k], vec![k])),
            (role, Some(key)) => match groups
                .iter_mut()
                .find(|(r, ks)| *r == role && group_key(&inputs[ks[0]]) == Some(key))
            {
                Some((_, ks)) => ks.push(k),
                None => groups.push((role, vec![k])),
            },
        }
    }
    // Essential stable inputs get a slot; per node a mask marks the slots,
    // or at awaiting nodes the responses, whose designated value holds.
    let mut slot_of = vec![usize::MAX; inputs.len()];
    let mut slots = 0;
    for (k, r) in roles.iter().enumerate() {
        if let Role::Essential(_) = r {
            slot_of[k] = slots;
            slots += 1;
        }
    }
    if slots > 64 {
        return Err(CheckerError::TooManyEssential(slots));
    }
    let n = g.node_count();
    let mut universal_read = vec![false; n];
    let mut mask = vec![0u64; n];
    for node in 0..n as u32 {
        let range = g.edge_range(node);
        if range.is_empty() {
            continue;
        }
        let params = g.params(node);
        let m = &mut mask[node as usize];
        if g.is_stable(node) {
            for (k, r) in roles.iter().enumerate() {
                if let Role::Essential(i) = r {
                    if spec.essential[*i].designated.holds(&params, &inputs[k]) {
                        *m |= 1 << slot_of[k];
                    }
                }
            }
        } else {
            let read = alphabet.get(g.label(g.edge_label(range.start))[0]);
            match spec.role(&read)? {
                Role::Universal => universal_read[node as usize] = true,
                Role::Essential(i) => {
                    for (r, e) in range.enumerate() {
                        let a = alphabet.get(g.label(g.edge_label(e))[0]);
                        if spec.essential[i].designated.holds(&params, &a) {
                            *m |= 1 << r;
                        }
                    }
                }
                _ => return Err(CheckerError::UncoveredRead(read.to_string())),
            }
        }
    }
    let mut win = vec![false; n];
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut changed = false;
        for node in (0..n).rev() {
            if win[node] {
                continue;
            }
            let range = g.edge_range(node as u32);
            if range.is_empty() {
                continue;
            }
            let good = |e: usize| goal[g.edge_label(e) as usize] || win[g.edge_dst(e) as usize];
            let m = mask[node];
            let wins = if g.is_stable(node as u32) {
                groups.iter().any(|(role, ks)| match role {
                    Role::Universal => ks.iter().all(|&k| good(range.start + k)),
                    Role::Essential(_) => ks.iter().any(|&k| m & (1 << slot_of[k]) != 0 && good(range.start + k)),
                    _ => good(range.start + ks[0]),
                })
            } else if universal_read[node] {
                range.clone().all(good)
            } else {
                range.clone().enumerate().any(|(r, e)| m & (1 << r) != 0 && good(e))
            };
            if wins {
                win[node] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let winning = win.iter().filter(|&&w| w).count();
    let losing_path = win.iter().position(|&w| !w).map(|node| {
        let parents = g.bfs_parents();
        g.path_actions(&g.path_to(&parents, node as u32))
    });
    Ok(LivenessVerdict {
        winning,
        nodes: n,
        losing_path,
        sweeps,
    })
}

fn set(text: &str) -> PredicateSet {
    PredicateSet::parse(text).unwrap_or_else(|e| panic!("liveness spec: {e}"))
}

fn join(parts: &[String]) -> PredicateSet {
    set(&parts.join(" || "))
}

/// Every sensor report and light read.
const ALL_SENSORS: &str = "GateSensor(*,*,*,*) || PaddleSensor(*,*,*,*) || BarrierSensor(*) || WaterSensor(*,*,*) \
     || EnteringTrafficLightSensor(*,*,*,*) || LeavingTrafficLightSensor(*,*,*,*) || BarrierTrafficLightSensor(*,*,*)";

/// The barrier can always be closed.
pub fn barrier_can_close() -> LivenessSpec {
    LivenessSpec {
        name: "livereq1".into(),
        goal: set("BarrierActuator(do_close)"),
        allowed: set(
            "BarrierCommand(command_close) || BarrierTrafficLightCommand(*,red) || EmergencyBarrierCommand(deactivate) || skip",
        ),
        universal: set(ALL_SENSORS),
        essential: Vec::new(),
    }
}

/// The gates at (l, s) can always be closed.
pub fn gates_can_close(l: LockId, s: StreamSide) -> LivenessSpec {
    LivenessSpec {
        name: format!("livereq2 l={l},s={s}"),
        goal: set(&format!("GateActuator({l},{s},*,do_close)")),
        allowed: join(&[
            format!("GateCommand({l},{s},command_close)"),
            format!("EnteringTrafficLightCommand({l},{s},single_red|redred)"),
            format!("LeavingTrafficLightCommand({l},{s},red)"),
            format!("EmergencyLockCommand({l},deactivate)"),
            "skip".into(),
        ]),
        universal: set(ALL_SENSORS),
        essential: Vec::new(),
    }
}

/// The gates at (l, s) can always be instructed to open.
pub fn ship_can_pass(l: LockId, s: StreamSide) -> LivenessSpec {
    let o = s.opposite();
    let essential = vec![
        Essential {
            class: set(&format!(
                "EnteringTrafficLightSensor({l},*,*,*) || LeavingTrafficLightSensor({l},*,*,*)"
            )),
            designated: Designated::TruthfulLight,
        },
        Essential {
            class: set(&format!("GateSensor({l},{o},*,*) || PaddleSensor({l},{o},*,*)")),
            designated: Designated::ClosedWhenClosing,
        },
        Essential {
            class: set(&format!("WaterSensor({l},{s},*)")),
            designated: Designated::EqualWhenPaddleOpen,
        },
    ];
    ship_can_pass_with(l, s, essential)
}

/// [`ship_can_pass`] with its essential classes replaced; every other sensor
/// and read stays universal.
pub fn ship_can_pass_with(l: LockId, s: StreamSide, essential: Vec<Essential>) -> LivenessSpec {
    let o = s.opposite();
    let universal = set(ALL_SENSORS);
    let universal = PredicateSet(universal.0.into_iter().flat_map(|p| carve(p, &essential)).collect());
    LivenessSpec {
        name: format!("livereq3 l={l},s={s}"),
        goal: set(&format!("GateActuator({l},{s},*,do_open)")),
        allowed: join(&[
            format!("GateCommand({l},{o},command_close)"),
            format!("GateCommand({l},{s},command_open|command_close)"),
            format!("PaddleCommand({l},{o},command_close)"),
            format!("PaddleCommand({l},{s},command_open|command_close)"),
            format!("EnteringTrafficLightCommand({l},*,single_red|redred)"),
            format!("LeavingTrafficLightCommand({l},*,red)"),
            format!("EmergencyLockCommand({l},deactivate)"),
            "skip".into(),
        ]),
        universal,
        essential,
    }
}

/// Splits a wildcard sensor predicate into concrete per-device predicates
/// that no essential class claims.
fn carve(p: crate::monitor::ActionPredicate, essential: &[Essential]) -> Vec<crate::monitor::ActionPredicate> {
    let config = PlantConfig::full();
    let alphabet = crate::domain::Alphabet::new(&config);
    let mut out = Vec::new();
    for a in alphabet.actions() {
        if p.matches(a) && !essential.iter().any(|e| e.class.matches(a)) {
            out.push(crate::monitor::ActionPredicate::parse(&a.to_string()).expect("action text parses"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{ExploreMode, Limits};
    use crate::controller::Controller;

    fn graph(depth: u32) -> StateGraph {
        let c = Controller::new(&PlantConfig::reduced());
        StateGraph::explore(&c, ExploreMode::Bounded(depth), &Limits::default(), false).unwrap()
    }

    #[test]
    fn unreachable_goal_loses_everywhere() {
        let g = graph(3);
        let mut spec = barrier_can_close();
        spec.goal = PredicateSet::default();
        let v = check_liveness_within(&g, &spec).unwrap();
        assert_eq!(v.winning, 0);
        assert_eq!(v.losing_path.unwrap(), Vec::<Action>::new());
    }

    #[test]
    fn uncovered_and_overlapping_classes() {
        let g = graph(3);
        let mut spec = barrier_can_close();
        spec.universal = set("GateSensor(*,*,*,*)");
        assert!(matches!(
            check_liveness_within(&g, &spec),
            Err(CheckerError::UncoveredRead(_))
        ));
        let mut spec = barrier_can_close();
        spec.essential.push(Essential {
            class: set("WaterSensor(*,*,*)"),
            designated: Designated::Value(set("WaterSensor(*,*,equal)")),
        });
        assert!(matches!(
            check_liveness_within(&g, &spec),
            Err(CheckerError::OverlappingClasses(_))
        ));
    }

    #[test]
    fn carved_universal_excludes_essential() {
        let spec = ship_can_pass(LockId::North, StreamSide::Upstream);
        let water_up: Action = "WaterSensor(north,upstream,equal)".parse().unwrap();
        let water_down: Action = "WaterSensor(north,downstream,equal)".parse().unwrap();
        assert!(!spec.universal.matches(&water_up));
        assert!(spec.universal.matches(&water_down));
        assert!(spec
            .universal
            .matches(&"BarrierTrafficLightSensor(upstream,east,fail_single)".parse().unwrap()));
    }
}
