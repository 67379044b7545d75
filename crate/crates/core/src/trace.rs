//! Line-oriented trace files: `<seq> <input|output|read> <action>`.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

use crate::domain::{Action, DomainError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Input,
    Output,
    Read,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Input => "input",
            EventKind::Output => "output",
            EventKind::Read => "read",
        }
    }

    /// The kind an action must carry in a well-formed trace.
    pub fn of(action: &Action) -> EventKind {
        if action.is_output() {
            EventKind::Output
        } else if action.kind().is_read() {
            EventKind::Read
        } else {
            EventKind::Input
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "input" => Ok(EventKind::Input),
            "output" => Ok(EventKind::Output),
            "read" => Ok(EventKind::Read),
            other => Err(TraceError::Malformed {
                line: 0,
                reason: format!("unknown event kind `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub action: Action,
}

impl TraceEvent {
    pub fn new(seq: u64, action: Action) -> Self {
        TraceEvent {
            seq,
            kind: EventKind::of(&action),
            action,
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.seq, self.kind, self.action)
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: {source}")]
    Action { line: usize, source: DomainError },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses one trace line; `line` is only used for error messages.
pub fn parse_line(text: &str, line: usize) -> Result<TraceEvent, TraceError> {
    let malformed = |reason: String| TraceError::Malformed { line, reason };
    let mut parts = text.trim().splitn(3, ' ');
    let (Some(seq), Some(kind), Some(action)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(malformed("expected `<seq> <kind> <action>`".into()));
    };
    let seq: u64 = seq
        .parse()
        .map_err(|_| malformed(format!("bad sequence number `{seq}`")))?;
    let kind: EventKind = kind
        .parse()
        .map_err(|_| malformed(format!("unknown event kind `{kind}`")))?;
    let action: Action = action.parse().map_err(|source| TraceError::Action { line, source })?;
    if EventKind::of(&action) != kind {
        return Err(malformed(format!("`{action}` cannot be an {kind} event")));
    }
    Ok(TraceEvent { seq, kind, action })
}

/// Reads a whole trace. Blank lines and `#` comments are skipped; sequence
/// numbers must increase strictly.
pub fn read_trace(reader: impl BufRead) -> Result<Vec<TraceEvent>, TraceError> {
    let mut events: Vec<TraceEvent> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let ev = parse_line(trimmed, i + 1)?;
        if let Some(prev) = events.last() {
            if ev.seq <= prev.seq {
                return Err(TraceError::Malformed {
                    line: i + 1,
                    reason: format!("sequence number {} does not follow {}", ev.seq, prev.seq),
                });
            }
        }
        events.push(ev);
    }
    Ok(events)
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>, TraceError> {
    read_trace(text.as_bytes())
}

pub fn write_trace<'a>(mut w: impl Write, events: impl IntoIterator<Item = &'a TraceEvent>) -> io::Result<()> {
    for ev in events {
        writeln!(w, "{ev}")?;
    }
    Ok(())
}

/// Numbers actions consecutively from 0.
pub fn number(actions: impl IntoIterator<Item = Action>) -> Vec<TraceEvent> {
    actions
        .into_iter()
        .enumerate()
        .map(|(i, a)| TraceEvent::new(i as u64, a))
        .collect()
}
