//! Action predicates with wildcards, value sets and pattern variables.
//!
//! Text syntax mirrors actions: `GateActuator($l,$s,*,do_open|do_close)`.
//! An argument is `*`, a `|`-separated value set, a negated set `!v|w`, a
//! variable `$x` or the opposite side of a variable `~$x`.

use std::fmt;

use thiserror::Error;

use crate::domain::{split_call, split_top_level, Action, ActionKind, ArgType, DomainError, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PatternError {
    #[error("bad predicate `{text}`: {reason}")]
    Syntax { text: String, reason: String },
    #[error("variable `${0}` is used in b or c but not bound by every alternative of a")]
    Unbound(String),
    #[error("variable `${name}` is used with sorts {first:?} and {second:?}")]
    SortClash {
        name: String,
        first: ArgType,
        second: ArgType,
    },
    #[error("opposite `~${0}` needs a stream-side variable")]
    OppositeOfNonSide(String),
    #[error("pattern expands to {0} bindings, more than the supported 64")]
    TooManyBindings(usize),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgPattern {
    Any,
    OneOf(Vec<Value>),
    NoneOf(Vec<Value>),
    Var(String),
    Opposite(String),
}

impl ArgPattern {
    fn var(&self) -> Option<&str> {
        match self {
            ArgPattern::Var(v) | ArgPattern::Opposite(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionPredicate {
    pub kind: ActionKind,
    pub args: Vec<ArgPattern>,
}

/// Variable assignment, in order of first appearance.
pub type Binding = Vec<(String, Value)>;

pub fn format_binding(binding: &Binding) -> String {
    if binding.is_empty() {
        return "-".to_string();
    }
    binding
        .iter()
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl ActionPredicate {
    pub fn parse(text: &str) -> Result<Self, PatternError> {
        let syntax = |reason: &str| PatternError::Syntax {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let text = text.trim();
        if text == "skip" {
            return Ok(ActionPredicate {
                kind: ActionKind::Skip,
                args: Vec::new(),
            });
        }
        let (name, inner) = split_call(text).ok_or_else(|| syntax("expected Kind(args)"))?;
        let kind: ActionKind = name.parse()?;
        let raw = split_top_level(inner);
        if raw.len() != kind.arg_types().len() {
            return Err(syntax("wrong number of arguments"));
        }
        let mut args = Vec::with_capacity(raw.len());
        for (&ty, arg) in kind.arg_types().iter().zip(raw) {
            let pat = if arg == "*" {
                ArgPattern::Any
            } else if let Some(v) = arg.strip_prefix("~$") {
                ArgPattern::Opposite(v.to_string())
            } else if let Some(v) = arg.strip_prefix('$') {
                ArgPattern::Var(v.to_string())
            } else if let Some(set) = arg.strip_prefix('!') {
                ArgPattern::NoneOf(parse_set(ty, set)?)
            } else {
                ArgPattern::OneOf(parse_set(ty, arg)?)
            };
            if matches!(pat, ArgPattern::Opposite(_)) && ty != ArgType::Side {
                return Err(PatternError::OppositeOfNonSide(arg.to_string()));
            }
            args.push(pat);
        }
        Ok(ActionPredicate { kind, args })
    }

    /// Variables with their sorts, in order of appearance.
    pub fn variables(&self) -> Vec<(String, ArgType)> {
        self.args
            .iter()
            .zip(self.kind.arg_types())
            .filter_map(|(a, &t)| a.var().map(|v| (v.to_string(), t)))
            .collect()
    }

    /// Replaces variables by their values. Unbound variables stay.
    pub fn instantiate(&self, binding: &Binding) -> ActionPredicate {
        let lookup = |name: &str| binding.iter().find(|(n, _)| n == name).map(|(_, v)| *v);
        let args = self
            .args
            .iter()
            .map(|a| match a {
                ArgPattern::Var(n) => lookup(n).map_or_else(|| a.clone(), |v| ArgPattern::OneOf(vec![v])),
                ArgPattern::Opposite(n) => {
                    lookup(n).map_or_else(|| a.clone(), |v| ArgPattern::OneOf(vec![v.opposite()]))
                }
                other => other.clone(),
            })
            .collect();
        ActionPredicate { kind: self.kind, args }
    }

    /// Evaluates a variable-free predicate. Variables never match.
    pub fn matches(&self, action: &Action) -> bool {
        if action.kind() != self.kind {
            return false;
        }
        action.args().iter().zip(&self.args).all(|(v, p)| match p {
            ArgPattern::Any => true,
            ArgPattern::OneOf(set) => set.contains(v),
            ArgPattern::NoneOf(set) => !set.contains(v),
            ArgPattern::Var(_) | ArgPattern::Opposite(_) => false,
        })
    }
}

fn parse_set(ty: ArgType, text: &str) -> Result<Vec<Value>, PatternError> {
    text.split('|')
        .map(|v| ty.parse(v.trim()).map_err(PatternError::from))
        .collect()
}

impl fmt::Display for ActionPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.kind == ActionKind::Skip {
            return f.write_str("skip");
        }
        write!(f, "{}(", self.kind)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            let join = |set: &[Value]| set.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("|");
            match a {
                ArgPattern::Any => f.write_str("*")?,
                ArgPattern::OneOf(set) => f.write_str(&join(set))?,
                ArgPattern::NoneOf(set) => write!(f, "!{}", join(set))?,
                ArgPattern::Var(v) => write!(f, "${v}")?,
                ArgPattern::Opposite(v) => write!(f, "~${v}")?,
            }
        }
        f.write_str(")")
    }
}

/// A disjunction of predicates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PredicateSet(pub Vec<ActionPredicate>);

impl PredicateSet {
    /// Parses `P || Q || ...`.
    pub fn parse(text: &str) -> Result<Self, PatternError> {
        if text.trim().is_empty() {
            return Ok(PredicateSet::default());
        }
        text.split("||")
            .map(ActionPredicate::parse)
            .collect::<Result<_, _>>()
            .map(PredicateSet)
    }

    pub fn matches(&self, action: &Action) -> bool {
        self.0.iter().any(|p| p.matches(action))
    }

    pub fn instantiate(&self, binding: &Binding) -> PredicateSet {
        PredicateSet(self.0.iter().map(|p| p.instantiate(binding)).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for PredicateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join(" || "))
    }
}
