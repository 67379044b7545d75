//! One connection's session, driven synchronously one client message or auto
//! tick at a time.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use lockctl_core::config::Config;
use lockctl_core::domain::Action;
use lockctl_core::monitor::catalog;
use lockctl_core::sim::{monitor_for, Fault, Recorder, Session};
use lockctl_core::trace::TraceEvent;
use lockctl_core::{Controller, Mutation};

use crate::protocol::{parse_client, ClientMessage, HelloInfo, Recording, ServerMessage, TickOp, PROTOCOL_VERSION};

/// Most ticks a single `step` may ask for.
pub const MAX_STEP: u64 = 100_000;
pub const MAX_RATE_HZ: f64 = 1000.0;

/// Settings shared by all connections of one server.
#[derive(Debug)]
pub struct ServiceConfig {
    pub config: Config,
    /// Requirement selection used when hello names none.
    pub requirements: String,
    /// Seed used when hello names none.
    pub seed: u64,
    /// Directory for `session-N.trace` / `session-N.scenario`; no recording if unset.
    pub record_dir: Option<PathBuf>,
    /// Serve a deliberately broken controller.
    pub mutation: Option<Mutation>,
    next_session: AtomicU64,
}

impl ServiceConfig {
    pub fn new(config: Config) -> Self {
        ServiceConfig {
            config,
            requirements: "all".to_string(),
            seed: 0,
            record_dir: None,
            mutation: None,
            next_session: AtomicU64::new(1),
        }
    }

    fn next_session(&self) -> u64 {
        self.next_session.fetch_add(1, Ordering::Relaxed)
    }
}

/// What to send back, and whether to close afterwards.
#[derive(Debug, Default)]
pub struct Reply {
    pub messages: Vec<ServerMessage>,
    pub close: bool,
}

pub struct SessionHandler {
    cfg: Arc<ServiceConfig>,
    session: Option<Session>,
    number: u64,
    rate_hz: Option<f64>,
    last_snapshot: Option<(Vec<(String, String)>, lockctl_core::sim::PlantSummary)>,
}

/// Creates the two record files, skipping numbers already taken on disk.
fn open_record_files(dir: &Path, cfg: &ServiceConfig) -> io::Result<(u64, Recording, File, File)> {
    std::fs::create_dir_all(dir)?;
    loop {
        let n = cfg.next_session();
        let trace = dir.join(format!("session-{n}.trace"));
        let scenario = dir.join(format!("session-{n}.scenario"));
        let t = match OpenOptions::new().write(true).create_new(true).open(&trace) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(e),
        };
        let s = File::create(&scenario)?;
        let rec = Recording {
            trace: trace.display().to_string(),
            scenario: scenario.display().to_string(),
        };
        return Ok((n, rec, t, s));
    }
}

impl SessionHandler {
    pub fn new(cfg: Arc<ServiceConfig>) -> Self {
        SessionHandler {
            cfg,
            session: None,
            number: 0,
            rate_hz: None,
            last_snapshot: None,
        }
    }

    /// Auto-tick rate set by the client, if running.
    pub fn rate_hz(&self) -> Option<f64> {
        self.rate_hz
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref()
    }

    pub fn handle_text(&mut self, text: &str) -> Reply {
        match parse_client(text) {
            Ok(msg) => self.handle(msg),
            Err((id, message)) => Reply {
                messages: vec![ServerMessage::Error { id, message }],
                close: false,
            },
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Reply {
        let id = msg.id().to_string();
        let mut out = Vec::new();
        let result = match msg {
            ClientMessage::Hello {
                v,
                seed,
                requirements,
                profile,
                ..
            } => {
                if v != PROTOCOL_VERSION {
                    return Reply {
                        messages: vec![ServerMessage::error(
                            Some(&id),
                            format!("protocol version {v} is not supported (server speaks {PROTOCOL_VERSION})"),
                        )],
                        close: true,
                    };
                }
                self.hello(&id, seed, requirements, profile, &mut out)
            }
            _ if self.session.is_none() => Err("send hello first".to_string()),
            ClientMessage::Command { action, .. } => self.command(&id, &action, &mut out),
            ClientMessage::Fault { fault, on, .. } => self.fault(&id, &fault, on, &mut out),
            ClientMessage::TickControl { op, .. } => self.tick_control(&id, op, &mut out),
            ClientMessage::StateSnapshot { .. } => {
                out.push(ServerMessage::Ack {
                    id: id.clone(),
                    hello: None,
                });
                out.push(self.snapshot(Some(id.clone())));
                Ok(())
            }
        };
        if let Err(message) = result {
            out.push(ServerMessage::Error { id: Some(id), message });
        }
        Reply {
            messages: out,
            close: false,
        }
    }

    /// One auto tick; nothing if not running.
    pub fn auto_tick(&mut self) -> Vec<ServerMessage> {
        let mut out = Vec::new();
        if self.rate_hz.is_none() || self.session.is_none() {
            return out;
        }
        if let Err(message) = self.run_ticks(1, &mut out) {
            self.rate_hz = None;
            out.push(ServerMessage::Error { id: None, message });
        }
        out
    }

    /// Marks the end of the recording.
    pub fn finish(&mut self) {
        if let Some(s) = &mut self.session {
            let _ = s.finish_recording();
        }
    }

    fn hello(
        &mut self,
        id: &str,
        seed: Option<u64>,
        requirements: Option<String>,
        profile: Option<lockctl_core::sim::FaultProfile>,
        out: &mut Vec<ServerMessage>,
    ) -> Result<(), String> {
        if self.session.is_some() {
            return Err("session already started".into());
        }
        let plant = &self.cfg.config.plant;
        let reqs =
            catalog::select(requirements.as_deref().unwrap_or(&self.cfg.requirements)).map_err(|e| e.to_string())?;
        let monitor = monitor_for(plant, &reqs).map_err(|e| e.to_string())?;
        let controller = match self.cfg.mutation {
            Some(m) => Controller::with_mutation(plant, m),
            None => Controller::new(plant),
        };
        let seed = seed.unwrap_or(self.cfg.seed);
        let profile = profile.unwrap_or(self.cfg.config.faults);
        let mut session = Session::with_controller(controller, profile, seed).map_err(|e| e.to_string())?;
        session.attach_monitor(monitor);
        let mut recording = None;
        if let Some(dir) = &self.cfg.record_dir {
            let (n, rec, t, s) =
                open_record_files(dir, &self.cfg).map_err(|e| format!("cannot create record files: {e}"))?;
            session
                .record(Recorder::new(BufWriter::new(t), BufWriter::new(s)))
                .map_err(|e| e.to_string())?;
            self.number = n;
            recording = Some(rec);
        } else {
            self.number = self.cfg.next_session();
        }
        self.session = Some(session);
        out.push(ServerMessage::Ack {
            id: id.to_string(),
            hello: Some(HelloInfo {
                v: PROTOCOL_VERSION,
                session: self.number,
                config: format!("{}: {}", self.cfg.config.name, plant.summary()),
                requirements: reqs.iter().map(|r| r.id.to_string()).collect(),
                seed,
                recording,
            }),
        });
        out.push(self.snapshot(None));
        Ok(())
    }

    fn command(&mut self, id: &str, text: &str, out: &mut Vec<ServerMessage>) -> Result<(), String> {
        let action: Action = text.parse().map_err(|e| format!("{e}"))?;
        let s = self.session.as_mut().expect("checked");
        let events = s.command(action).map_err(|e| e.to_string())?;
        out.push(ServerMessage::Ack {
            id: id.to_string(),
            hello: None,
        });
        self.after(events, out);
        Ok(())
    }

    fn fault(&mut self, id: &str, text: &str, on: bool, out: &mut Vec<ServerMessage>) -> Result<(), String> {
        let fault: Fault = text.parse().map_err(|e| format!("{e}"))?;
        let s = self.session.as_mut().expect("checked");
        s.fault(fault, on).map_err(|e| e.to_string())?;
        out.push(ServerMessage::Ack {
            id: id.to_string(),
            hello: None,
        });
        self.after(Vec::new(), out);
        Ok(())
    }

    fn tick_control(&mut self, id: &str, op: TickOp, out: &mut Vec<ServerMessage>) -> Result<(), String> {
        match op {
            TickOp::Step { ticks } => {
                if ticks > MAX_STEP {
                    return Err(format!("at most {MAX_STEP} ticks per step"));
                }
                out.push(ServerMessage::Ack {
                    id: id.to_string(),
                    hello: None,
                });
                self.run_ticks(ticks, out)
            }
            TickOp::Run { rate_hz } => {
                if !(rate_hz > 0.0 && rate_hz <= MAX_RATE_HZ) {
                    return Err(format!("rate_hz must be in (0, {MAX_RATE_HZ}]"));
                }
                self.rate_hz = Some(rate_hz);
                out.push(ServerMessage::Ack {
                    id: id.to_string(),
                    hello: None,
                });
                Ok(())
            }
            TickOp::Pause => {
                self.rate_hz = None;
                out.push(ServerMessage::Ack {
                    id: id.to_string(),
                    hello: None,
                });
                Ok(())
            }
        }
    }

    fn run_ticks(&mut self, ticks: u64, out: &mut Vec<ServerMessage>) -> Result<(), String> {
        for _ in 0..ticks {
            let s = self.session.as_mut().expect("checked");
            let events = s.tick().map_err(|e| e.to_string())?;
            self.after(events, out);
        }
        Ok(())
    }

    /// Trace events, then fresh violations, then storage errors, then a
    /// snapshot if anything changed.
    fn after(&mut self, events: Vec<TraceEvent>, out: &mut Vec<ServerMessage>) {
        let s = self.session.as_mut().expect("checked");
        out.extend(events.iter().map(|e| ServerMessage::TraceEvent {
            seq: e.seq,
            event: e.kind.as_str(),
            action: e.action.to_string(),
        }));
        for line in s.new_violations() {
            let title = catalog::find(line.id).map(|r| r.title).unwrap_or("");
            out.push(ServerMessage::Violation {
                requirement: line.id,
                title,
                witness: line.witness,
                binding: line.binding,
            });
        }
        if let Some(e) = s.take_record_error() {
            out.push(ServerMessage::error(None, format!("recording stopped: {e}")));
        }
        let params = s.params().entries(s.config());
        let mut plant = s.plant().summary();
        plant.tick = 0;
        let current = (params, plant);
        if self.last_snapshot.as_ref() != Some(&current) {
            out.push(self.snapshot(None));
        }
    }

    fn snapshot(&mut self, id: Option<String>) -> ServerMessage {
        let s = self.session.as_ref().expect("checked");
        let entries = s.params().entries(s.config());
        let plant = s.plant().summary();
        let mut key = plant.clone();
        key.tick = 0;
        let params = entries
            .iter()
            .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
            .collect();
        self.last_snapshot = Some((entries, key));
        ServerMessage::StateSnapshot {
            id,
            tick: s.tick_count(),
            seq: s.stats().events,
            params,
            plant,
        }
    }
}

impl Drop for SessionHandler {
    fn drop(&mut self) {
        self.finish();
    }
}
