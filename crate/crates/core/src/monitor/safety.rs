//! Two-location pattern monitors: after a trigger `a` and before a blocker
//! `b`, the forbidden action `c` must not occur. With `initial` set the
//! monitor starts armed.

use std::fmt;

use super::predicate::{format_binding, Binding, PatternError, PredicateSet};
use crate::domain::{cartesian, Action, ActionId, Alphabet, ArgType, PlantConfig, Value};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SafetyPattern {
    pub a: PredicateSet,
    pub b: PredicateSet,
    pub c: PredicateSet,
    pub initial: bool,
}

impl SafetyPattern {
    pub fn parse(a: &str, b: &str, c: &str, initial: bool) -> Result<Self, PatternError> {
        let p = SafetyPattern {
            a: PredicateSet::parse(a)?,
            b: PredicateSet::parse(b)?,
            c: PredicateSet::parse(c)?,
            initial,
        };
        p.variables()?;
        Ok(p)
    }

    /// Pattern variables in order of first appearance. Every variable of `b`
    /// or `c` must occur in each alternative of `a`.
    pub fn variables(&self) -> Result<Vec<(String, ArgType)>, PatternError> {
        let mut vars: Vec<(String, ArgType)> = Vec::new();
        for p in self.a.0.iter().chain(&self.b.0).chain(&self.c.0) {
            for (name, ty) in p.variables() {
                match vars.iter().find(|(n, _)| *n == name) {
                    Some(&(_, first)) if first != ty => {
                        return Err(PatternError::SortClash {
                            name,
                            first,
                            second: ty,
                        })
                    }
                    Some(_) => {}
                    None => vars.push((name, ty)),
                }
            }
        }
        for p in self.b.0.iter().chain(&self.c.0) {
            for (name, _) in p.variables() {
                let everywhere = !self.a.is_empty()
                    && self
                        .a
                        .0
                        .iter()
                        .all(|alt| alt.variables().iter().any(|(n, _)| *n == name));
                if !everywhere {
                    return Err(PatternError::Unbound(name));
                }
            }
        }
        Ok(vars)
    }

    /// One binding per combination of configured values.
    pub fn bindings(&self, config: &PlantConfig) -> Result<Vec<Binding>, PatternError> {
        let vars = self.variables()?;
        let domains: Vec<Vec<Value>> = vars.iter().map(|(_, t)| t.domain(config)).collect();
        let combos = cartesian(&domains);
        if combos.len() > 64 {
            return Err(PatternError::TooManyBindings(combos.len()));
        }
        Ok(combos
            .into_iter()
            .map(|vals| vars.iter().map(|(n, _)| n.clone()).zip(vals).collect())
            .collect())
    }

    pub fn compile(&self, alphabet: &Alphabet) -> Result<MonitorAutomaton, PatternError> {
        let bindings = self.bindings(alphabet.config())?;
        let mut masks = vec![[0u64; 3]; alphabet.len()];
        for (i, binding) in bindings.iter().enumerate() {
            let sets = [
                self.a.instantiate(binding),
                self.b.instantiate(binding),
                self.c.instantiate(binding),
            ];
            for (id, action) in alphabet.actions().iter().enumerate() {
                for (k, set) in sets.iter().enumerate() {
                    if set.matches(action) {
                        masks[id][k] |= 1 << i;
                    }
                }
            }
        }
        let all = if bindings.len() == 64 {
            u64::MAX
        } else {
            (1u64 << bindings.len()) - 1
        };
        Ok(MonitorAutomaton {
            alphabet: alphabet.clone(),
            masks,
            initial: if self.initial { all } else { 0 },
            bindings,
        })
    }
}

impl fmt::Display for SafetyPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "a={} ; b={} ; c={} ; initial={}",
            self.a, self.b, self.c, self.initial
        )
    }
}

/// Compiled monitor: per action id the binding masks of `a`, `b` and `c`.
#[derive(Debug, Clone)]
pub struct MonitorAutomaton {
    alphabet: Alphabet,
    masks: Vec<[u64; 3]>,
    initial: u64,
    bindings: Vec<Binding>,
}

/// A violation: trace position of the forbidden action and the binding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub seq: u64,
    pub binding: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonitorState {
    /// Bit i set: binding i is armed.
    pub armed: u64,
    pub violation: Option<Violation>,
}

impl MonitorState {
    pub fn is_violated(&self) -> bool {
        self.violation.is_some()
    }
}

impl MonitorAutomaton {
    pub fn initial_state(&self) -> MonitorState {
        MonitorState {
            armed: self.initial,
            violation: None,
        }
    }

    pub fn initial_mask(&self) -> u64 {
        self.initial
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    pub fn binding_text(&self, i: usize) -> String {
        format_binding(&self.bindings[i])
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// `[a, b, c]` binding masks of an action id.
    pub fn masks(&self, id: ActionId) -> [u64; 3] {
        self.masks[id.index()]
    }

    pub fn advance_id(&self, state: &MonitorState, id: ActionId, seq: u64) -> MonitorState {
        if state.violation.is_some() {
            return *state;
        }
        let [a, b, c] = self.masks[id.index()];
        let hit = state.armed & c;
        if hit != 0 {
            return MonitorState {
                armed: state.armed,
                violation: Some(Violation {
                    seq,
                    binding: hit.trailing_zeros() as usize,
                }),
            };
        }
        MonitorState {
            armed: a | (state.armed & !b),
            violation: None,
        }
    }

    /// Actions outside the configuration touch no binding.
    pub fn advance(&self, state: &MonitorState, action: &Action, seq: u64) -> MonitorState {
        match self.alphabet.encode(action) {
            Ok(id) => self.advance_id(state, id, seq),
            Err(_) => *state,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(m: &MonitorAutomaton, trace: &[&str]) -> MonitorState {
        let mut s = m.initial_state();
        for (i, t) in trace.iter().enumerate() {
            s = m.advance(&s, &t.parse().unwrap(), i as u64);
        }
        s
    }

    fn water() -> SafetyPattern {
        SafetyPattern::parse(
            "WaterSensor($l,$s,unequal|fail_water_sensor)",
            "WaterSensor($l,$s,equal)",
            "GateActuator($l,$s,*,do_open)",
            true,
        )
        .unwrap()
    }

    #[test]
    fn water_pattern() {
        let m = water().compile(&Alphabet::new(&PlantConfig::full())).unwrap();
        assert_eq!(m.bindings().len(), 4);
        assert!(!run(&m, &[]).is_violated());
        let s = run(
            &m,
            &[
                "GateCommand(north,upstream,command_open)",
                "GateActuator(north,upstream,east,do_open)",
            ],
        );
        assert_eq!(s.violation.unwrap().seq, 1);
        assert_eq!(m.binding_text(s.violation.unwrap().binding), "l=north,s=upstream");
        let s = run(
            &m,
            &[
                "WaterSensor(north,upstream,equal)",
                "GateCommand(north,upstream,command_open)",
                "GateActuator(north,upstream,east,do_open)",
                "WaterSensor(north,downstream,unequal)",
                "GateActuator(north,upstream,west,do_open)",
            ],
        );
        assert!(!s.is_violated());
        let s = run(
            &m,
            &[
                "WaterSensor(north,upstream,equal)",
                "WaterSensor(north,upstream,fail_water_sensor)",
                "GateActuator(north,upstream,west,do_open)",
            ],
        );
        assert_eq!(s.violation.unwrap().seq, 2);
    }

    #[test]
    fn absorbing_and_transitions() {
        let m = water().compile(&Alphabet::new(&PlantConfig::reduced())).unwrap();
        let v = MonitorState {
            armed: 0,
            violation: Some(Violation { seq: 3, binding: 0 }),
        };
        assert_eq!(m.advance(&v, &"skip".parse().unwrap(), 9), v);
        let s = m.initial_state();
        assert_eq!(s.armed, 0b11);
        let s = m.advance(&s, &"WaterSensor(north,downstream,equal)".parse().unwrap(), 0);
        assert_eq!(s.armed, 0b01);
        let s = m.advance(&s, &"WaterSensor(north,downstream,unequal)".parse().unwrap(), 1);
        assert_eq!(s.armed, 0b11);
    }

    #[test]
    fn variable_checks() {
        assert!(matches!(
            SafetyPattern::parse("GateCommand($l,*,command_open)", "", "GateActuator($l,$s,*,do_open)", false),
            Err(PatternError::Unbound(v)) if v == "s"
        ));
        assert!(matches!(
            SafetyPattern::parse(
                "GateCommand($l,$s,command_open) || EmergencyLockCommand($l,activate)",
                "",
                "GateActuator($l,$s,*,do_open)",
                false
            ),
            Err(PatternError::Unbound(_))
        ));
        assert!(matches!(
            SafetyPattern::parse("GateCommand($l,$s,command_open)", "", "WaterSensor($s,$l,equal)", false),
            Err(PatternError::SortClash { .. })
        ));
    }

    #[test]
    fn unsatisfiable_trigger_never_fires() {
        let p = SafetyPattern::parse("", "", "GateActuator(*,*,*,do_open)", false).unwrap();
        let m = p.compile(&Alphabet::new(&PlantConfig::reduced())).unwrap();
        assert!(!run(&m, &["GateActuator(north,upstream,east,do_open)"]).is_violated());
    }
}
