//! Operator obligations. Boolean observation variables track what the
//! operator and controller have done so far; a triggering command issued
//! while a clause's condition holds obliges a set of outputs, each of which
//! must occur before the next stable input unless a suppressing action
//! cancels the obligation first.

use thiserror::Error;

use super::predicate::{PatternError, PredicateSet};
use crate::domain::{Action, ActionId, Alphabet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Literal {
    pub var: usize,
    pub value: bool,
}

/// When an action matching `on` occurs and `guard` holds, the listed
/// variables are cleared and then set. All rules read the old valuation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateRule {
    pub on: PredicateSet,
    pub guard: Vec<Literal>,
    pub set: Vec<usize>,
    pub clear: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub trigger: PredicateSet,
    /// Evaluated before the trigger's own updates.
    pub condition: Vec<Literal>,
    /// Every item must be matched by some later action.
    pub items: Vec<PredicateSet>,
    pub suppress: PredicateSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ObligationSpec {
    pub vars: Vec<(String, bool)>,
    pub rules: Vec<UpdateRule>,
    pub clauses: Vec<Clause>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObligationError {
    #[error("{0} observation variables, at most 64 are supported")]
    TooManyVariables(usize),
    #[error("{0} obligation items, at most 64 are supported")]
    TooManyItems(usize),
    #[error("unknown observation variable `{0}`")]
    UnknownVariable(String),
    #[error(transparent)]
    Pattern(#[from] PatternError),
}

/// Builds specs from predicate text and variable names.
#[derive(Debug, Default)]
pub struct SpecBuilder {
    spec: ObligationSpec,
}

impl SpecBuilder {
    pub fn new() -> Self {
        SpecBuilder::default()
    }

    pub fn var(&mut self, name: &str, initial: bool) -> &mut Self {
        self.spec.vars.push((name.to_string(), initial));
        self
    }

    fn index(&self, name: &str) -> Result<usize, ObligationError> {
        self.spec
            .vars
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| ObligationError::UnknownVariable(name.to_string()))
    }

    /// Literals are variable names, negated with a leading `!`.
    fn literals(&self, lits: &[&str]) -> Result<Vec<Literal>, ObligationError> {
        lits.iter()
            .map(|l| match l.strip_prefix('!') {
                Some(n) => Ok(Literal {
                    var: self.index(n)?,
                    value: false,
                }),
                None => Ok(Literal {
                    var: self.index(l)?,
                    value: true,
                }),
            })
            .collect()
    }

    pub fn rule(
        &mut self,
        on: &str,
        guard: &[&str],
        set: &[&str],
        clear: &[&str],
    ) -> Result<&mut Self, ObligationError> {
        let rule = UpdateRule {
            on: PredicateSet::parse(on)?,
            guard: self.literals(guard)?,
            set: set.iter().map(|n| self.index(n)).collect::<Result<_, _>>()?,
            clear: clear.iter().map(|n| self.index(n)).collect::<Result<_, _>>()?,
        };
        self.spec.rules.push(rule);
        Ok(self)
    }

    pub fn clause(
        &mut self,
        trigger: &str,
        condition: &[&str],
        items: &[String],
        suppress: &str,
    ) -> Result<&mut Self, ObligationError> {
        let clause = Clause {
            trigger: PredicateSet::parse(trigger)?,
            condition: self.literals(condition)?,
            items: items.iter().map(|i| PredicateSet::parse(i)).collect::<Result<_, _>>()?,
            suppress: PredicateSet::parse(suppress)?,
        };
        self.spec.clauses.push(clause);
        Ok(self)
    }

    pub fn build(&mut self) -> ObligationSpec {
        std::mem::take(&mut self.spec)
    }
}

fn literal_masks(lits: &[Literal]) -> (u64, u64) {
    lits.iter().fold((0, 0), |(pos, neg), l| {
        if l.value {
            (pos | 1 << l.var, neg)
        } else {
            (pos, neg | 1 << l.var)
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompiledRule {
    pub pos: u64,
    pub neg: u64,
    pub set: u64,
    pub clear: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompiledTrigger {
    pub pos: u64,
    pub neg: u64,
    pub items: u64,
}

/// Everything one action does to an obligation monitor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Effect {
    pub stable_input: bool,
    pub rules: Vec<CompiledRule>,
    pub triggers: Vec<CompiledTrigger>,
    pub discharge: u64,
    pub suppress: u64,
}

impl Effect {
    pub fn is_inert(&self) -> bool {
        !self.stable_input
            && self.rules.is_empty()
            && self.triggers.is_empty()
            && self.discharge == 0
            && self.suppress == 0
    }

    /// New valuation after the simultaneous updates.
    pub fn update(&self, vals: u64) -> u64 {
        let (mut set, mut clear) = (0, 0);
        for r in &self.rules {
            if vals & r.pos == r.pos && vals & r.neg == 0 {
                set |= r.set;
                clear |= r.clear;
            }
        }
        (vals & !clear) | set
    }

    /// Pending items after suppression, discharge and triggers.
    pub fn pending(&self, vals: u64, pending: u64) -> u64 {
        let mut p = pending & !self.suppress & !self.discharge;
        for t in &self.triggers {
            if vals & t.pos == t.pos && vals & t.neg == 0 {
                p |= t.items;
            }
        }
        p
    }

    /// Whether some trigger fires under `vals`.
    pub fn fires(&self, vals: u64) -> bool {
        self.triggers.iter().any(|t| vals & t.pos == t.pos && vals & t.neg == 0)
    }
}

#[derive(Debug, Clone)]
pub struct CompiledObligation {
    pub initial: u64,
    pub effects: Vec<Effect>,
    pub item_text: Vec<String>,
    pub var_names: Vec<String>,
}

impl ObligationSpec {
    pub fn compile(&self, alphabet: &Alphabet) -> Result<CompiledObligation, ObligationError> {
        if self.vars.len() > 64 {
            return Err(ObligationError::TooManyVariables(self.vars.len()));
        }
        let item_count: usize = self.clauses.iter().map(|c| c.items.len()).sum();
        if item_count > 64 {
            return Err(ObligationError::TooManyItems(item_count));
        }
        let initial = self
            .vars
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &(_, v))| if v { acc | 1 << i } else { acc });
        let mut effects = Vec::with_capacity(alphabet.len());
        for action in alphabet.actions() {
            let mut e = Effect {
                stable_input: action.kind().is_stable_input(),
                ..Effect::default()
            };
            for r in &self.rules {
                if r.on.matches(action) {
                    let (pos, neg) = literal_masks(&r.guard);
                    let bits = |v: &[usize]| v.iter().fold(0u64, |acc, &i| acc | 1 << i);
                    e.rules.push(CompiledRule {
                        pos,
                        neg,
                        set: bits(&r.set),
                        clear: bits(&r.clear),
                    });
                }
            }
            let mut base = 0;
            for c in &self.clauses {
                let mask = if c.items.is_empty() {
                    0
                } else {
                    (u64::MAX >> (64 - c.items.len())) << base
                };
                if c.trigger.matches(action) && mask != 0 {
                    let (pos, neg) = literal_masks(&c.condition);
                    e.triggers.push(CompiledTrigger { pos, neg, items: mask });
                }
                if c.suppress.matches(action) {
                    e.suppress |= mask;
                }
                for (k, item) in c.items.iter().enumerate() {
                    if item.matches(action) {
                        e.discharge |= 1 << (base + k);
                    }
                }
                base += c.items.len();
            }
            effects.push(e);
        }
        Ok(CompiledObligation {
            initial,
            effects,
            item_text: self
                .clauses
                .iter()
                .flat_map(|c| c.items.iter().map(|i| i.to_string()))
                .collect(),
            var_names: self.vars.iter().map(|(n, _)| n.clone()).collect(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObligationState {
    pub vals: u64,
    pub pending: u64,
    /// Trace position of the command that created the pending items.
    pub trigger_seq: u64,
    pub violation: Option<u64>,
}

impl CompiledObligation {
    pub fn initial_state(&self) -> ObligationState {
        ObligationState {
            vals: self.initial,
            pending: 0,
            trigger_seq: 0,
            violation: None,
        }
    }

    pub fn advance_id(&self, st: &ObligationState, id: ActionId, seq: u64) -> ObligationState {
        if st.violation.is_some() {
            return *st;
        }
        let e = &self.effects[id.index()];
        let mut next = *st;
        if e.stable_input && st.pending != 0 {
            next.violation = Some(st.trigger_seq);
            return next;
        }
        if e.fires(st.vals) {
            next.trigger_seq = seq;
        }
        next.pending = e.pending(st.vals, st.pending);
        next.vals = e.update(st.vals);
        next
    }

    pub fn advance(&self, st: &ObligationState, action: &Action, alphabet: &Alphabet, seq: u64) -> ObligationState {
        match alphabet.encode(action) {
            Ok(id) => self.advance_id(st, id, seq),
            Err(_) => *st,
        }
    }

    /// End of trace: outstanding items are a violation.
    pub fn finish(&self, st: &ObligationState) -> ObligationState {
        let mut next = *st;
        if next.violation.is_none() && next.pending != 0 {
            next.violation = Some(st.trigger_seq);
        }
        next
    }

    /// Text of the outstanding items.
    pub fn describe_pending(&self, pending: u64) -> Vec<&str> {
        (0..self.item_text.len())
            .filter(|&i| pending & (1 << i) != 0)
            .map(|i| self.item_text[i].as_str())
            .collect()
    }
}
