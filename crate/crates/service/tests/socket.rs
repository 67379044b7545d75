//! The service spoken to over a real socket.

use std::sync::Arc;
use std::time::Duration;

use futures::{SinkExt, StreamExt};
use lockctl_core::config::Config;
use lockctl_core::domain::{Action, ActionClass};
use lockctl_core::sim::{replay, Scenario};
use lockctl_core::{Controller, Mutation, PlantConfig};
use lockctl_service::{serve, ServiceConfig};
use serde_json::{json, Value};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Socket = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start(cfg: ServiceConfig) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, Arc::new(cfg)));
    format!("ws://{addr}/ws")
}

fn full() -> ServiceConfig {
    ServiceConfig::new(Config::resolve("full").unwrap())
}

struct Client {
    ws: Socket,
    /// Every trace_event received so far, in order.
    trace: Vec<(u64, String)>,
    errors: Vec<Value>,
}

impl Client {
    async fn connect(url: &str) -> Client {
        let (ws, _) = connect_async(url).await.unwrap();
        Client {
            ws,
            trace: Vec::new(),
            errors: Vec::new(),
        }
    }

    async fn send(&mut self, v: Value) {
        self.send_text(v.to_string()).await;
    }

    async fn send_text(&mut self, text: String) {
        self.ws.send(Message::Text(text.into())).await.unwrap();
    }

    /// The next JSON message, or `None` once the server has closed.
    async fn next(&mut self) -> Option<Value> {
        loop {
            let msg = tokio::time::timeout(Duration::from_secs(10), self.ws.next())
                .await
                .expect("server went quiet");
            match msg {
                Some(Ok(Message::Text(t))) => {
                    let v: Value = serde_json::from_str(&t).unwrap();
                    if v["kind"] == "trace_event" {
                        self.trace
                            .push((v["seq"].as_u64().unwrap(), v["action"].as_str().unwrap().to_string()));
                    }
                    if v["kind"] == "error" {
                        self.errors.push(v.clone());
                    }
                    return Some(v);
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return None,
                Some(Ok(_)) => continue,
            }
        }
    }

    async fn expect(&mut self) -> Value {
        self.next().await.expect("connection closed")
    }

    /// Messages up to and including the first one satisfying `stop`.
    async fn until(&mut self, stop: impl Fn(&Value) -> bool) -> Vec<Value> {
        let mut out = Vec::new();
        loop {
            let v = self.expect().await;
            let done = stop(&v);
            out.push(v);
            if done {
                return out;
            }
        }
    }

    async fn hello(&mut self) -> Value {
        self.send(json!({"kind": "hello", "v": 1, "id": "h"})).await;
        let ack = self.expect().await;
        assert_eq!(ack["kind"], "ack", "{ack}");
        let snap = self.expect().await;
        assert_eq!(snap["kind"], "state_snapshot");
        ack
    }

    /// Sends a request for a snapshot and returns it, skipping nothing else.
    async fn snapshot(&mut self, id: &str) -> Value {
        self.send(json!({"kind": "state_snapshot", "id": id})).await;
        let msgs = self.until(|v| v["kind"] == "state_snapshot" && v["id"] == id).await;
        msgs.last().unwrap().clone()
    }
}

fn kinds(msgs: &[Value]) -> Vec<&str> {
    msgs.iter().map(|m| m["kind"].as_str().unwrap()).collect()
}

#[tokio::test]
async fn hello_returns_the_catalog() {
    let url = start(full()).await;
    let mut c = Client::connect(&url).await;
    let ack = c.hello().await;
    assert_eq!(ack["id"], "h");
    assert_eq!(ack["v"], 1);
    assert!(ack["config"].as_str().unwrap().starts_with("full"));
    let ids: Vec<&str> = ack["requirements"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert_eq!(ids.len(), 53);
    assert!(ids.contains(&"safreq1") && ids.contains(&"livereq6"));
    assert!(ack.get("recording").is_none());
}

#[tokio::test]
async fn emergency_command_streams_its_burst() {
    let url = start(full()).await;
    let mut c = Client::connect(&url).await;
    c.hello().await;
    c.send(json!({"kind": "command", "id": "e1", "action": "EmergencyLockCommand(north,activate)"}))
        .await;
    let msgs = c.until(|v| v["kind"] == "state_snapshot").await;
    assert_eq!(msgs[0]["kind"], "ack");
    assert_eq!(msgs[0]["id"], "e1");
    let events: Vec<&Value> = msgs.iter().filter(|m| m["kind"] == "trace_event").collect();
    assert_eq!(events.len(), msgs.len() - 2, "{:?}", kinds(&msgs));
    assert_eq!(events[0]["action"], "EmergencyLockCommand(north,activate)");
    let outputs = events.iter().filter(|e| e["event"] == "output").count();
    assert!(outputs >= 16, "{outputs} outputs");
    // Sequence numbers start at zero and have no gaps.
    for (k, e) in events.iter().enumerate() {
        assert_eq!(e["seq"], k as u64);
    }
    let snap = msgs.last().unwrap();
    assert_eq!(snap["params"]["emergency(north)"], "true");
    assert_eq!(snap["params"]["emergency(south)"], "false");
    assert_eq!(snap["seq"], events.len() as u64);
}

#[tokio::test]
async fn barrier_closes_with_a_stuck_green_light() {
    let url = start(full()).await;
    let mut c = Client::connect(&url).await;
    c.hello().await;
    c.send(
        json!({"kind": "fault", "id": "f1", "fault": "stuck_aspect(green)@barrier_light(upstream,east)", "on": true}),
    )
    .await;
    let msgs = c.until(|v| v["kind"] == "state_snapshot").await;
    assert_eq!(kinds(&msgs), ["ack", "state_snapshot"]);
    let faults = msgs[1]["plant"]["faults"].as_array().unwrap();
    assert_eq!(faults.len(), 1);
    for side in ["upstream", "downstream"] {
        let action = format!("BarrierTrafficLightCommand({side},red)");
        c.send(json!({"kind": "command", "id": side, "action": action})).await;
        c.snapshot(side).await;
    }
    c.send(json!({"kind": "command", "id": "b1", "action": "BarrierCommand(command_close)"}))
        .await;
    let msgs = c.until(|v| v["kind"] == "state_snapshot").await;
    assert_eq!(msgs[0]["kind"], "ack");
    let actions: Vec<&str> = msgs
        .iter()
        .filter(|m| m["kind"] == "trace_event")
        .map(|m| m["action"].as_str().unwrap())
        .collect();
    assert_eq!(actions, ["BarrierCommand(command_close)", "BarrierActuator(do_close)"]);
    assert!(c
        .trace
        .iter()
        .any(|(_, a)| a == "BarrierTrafficLightActuator(upstream,east,red)"));
    // The stuck light keeps showing green although it was set to red.
    let snap = msgs.last().unwrap();
    assert_eq!(snap["params"]["barrier_light(upstream)"], "red");
    let lights = snap["plant"]["lights"].as_array().unwrap();
    assert!(
        lights.contains(&json!(["barrier_light(upstream,east)", "green"])),
        "{lights:?}"
    );
}

#[tokio::test]
async fn bad_messages_leave_the_session_alive() {
    let url = start(full()).await;
    let mut c = Client::connect(&url).await;
    c.send(json!({"kind": "command", "id": "early", "action": "BarrierCommand(command_close)"}))
        .await;
    let e = c.expect().await;
    assert_eq!((e["kind"].as_str(), e["id"].as_str()), (Some("error"), Some("early")));
    c.hello().await;

    c.send_text("{not json".into()).await;
    let e = c.expect().await;
    assert_eq!(e["kind"], "error");
    assert!(e.get("id").is_none());

    for (id, bad) in [
        ("c1", json!({"kind": "command", "id": "c1", "action": "Nonsense(x)"})),
        (
            "c2",
            json!({"kind": "command", "id": "c2", "action": "BarrierActuator(do_close)"}),
        ),
        ("c3", json!({"kind": "launch", "id": "c3"})),
        (
            "c4",
            json!({"kind": "fault", "id": "c4", "fault": "melted@barrier", "on": true}),
        ),
        (
            "c5",
            json!({"kind": "tick_control", "id": "c5", "mode": "run", "rate_hz": -1.0}),
        ),
        (
            "c6",
            json!({"kind": "tick_control", "id": "c6", "mode": "step", "ticks": 1_000_000_000u64}),
        ),
        ("c7", json!({"kind": "hello", "v": 1, "id": "c7"})),
    ] {
        c.send(bad).await;
        let e = c.expect().await;
        assert_eq!(e["kind"], "error", "{id}: {e}");
        assert_eq!(e["id"], id);
    }
    let snap = c.snapshot("s").await;
    assert_eq!(snap["seq"], 0);
    assert!(c.trace.is_empty());
}

#[tokio::test]
async fn other_protocol_versions_are_refused() {
    let url = start(full()).await;
    let mut c = Client::connect(&url).await;
    c.send(json!({"kind": "hello", "v": 2, "id": "h"})).await;
    let e = c.expect().await;
    assert_eq!(e["kind"], "error");
    assert_eq!(e["id"], "h");
    assert!(c.next().await.is_none());
}

#[tokio::test]
async fn stepping_and_running_advance_the_plant() {
    let url = start(ServiceConfig::new(Config::resolve("reduced").unwrap())).await;
    let mut c = Client::connect(&url).await;
    c.hello().await;
    c.send(json!({"kind": "tick_control", "id": "t1", "mode": "step", "ticks": 30}))
        .await;
    assert_eq!(c.expect().await["kind"], "ack");
    let snap = c.snapshot("s1").await;
    assert_eq!(snap["tick"], 30);
    // One heartbeat: the seven readings of the reduced plant as inputs.
    let inputs: Vec<&str> = c
        .trace
        .iter()
        .map(|(_, a)| a.as_str())
        .filter(|a| a.parse::<Action>().unwrap().kind().class() == ActionClass::Sensor)
        .collect();
    assert_eq!(inputs.len(), 7, "{:?}", c.trace);

    c.send(json!({"kind": "tick_control", "id": "r", "mode": "run", "rate_hz": 200.0}))
        .await;
    assert_eq!(c.expect().await["kind"], "ack");
    tokio::time::sleep(Duration::from_millis(400)).await;
    c.send(json!({"kind": "tick_control", "id": "p", "mode": "pause"}))
        .await;
    c.until(|v| v["kind"] == "ack" && v["id"] == "p").await;
    let a = c.snapshot("s2").await["tick"].as_u64().unwrap();
    assert!(a > 30, "no auto ticks");
    tokio::time::sleep(Duration::from_millis(100)).await;
    assert_eq!(c.snapshot("s3").await["tick"].as_u64().unwrap(), a);
}

/// Folds received trace actions through a fresh controller.
fn fold(config: &PlantConfig, trace: &[(u64, String)]) -> Vec<(String, String)> {
    let c = Controller::new(config);
    let mut state = c.initial_state();
    for (k, (seq, a)) in trace.iter().enumerate() {
        assert_eq!(*seq, k as u64);
        state = c.step(&state, &a.parse::<Action>().unwrap()).unwrap();
    }
    assert!(state.is_stable());
    state.params.entries(config)
}

#[tokio::test]
async fn snapshots_are_the_fold_of_the_trace() {
    let url = start(full()).await;
    let mut c = Client::connect(&url).await;
    c.hello().await;
    let script = [
        json!({"kind": "command", "id": "1", "action": "GateCommand(north,upstream,command_open)"}),
        json!({"kind": "tick_control", "id": "2", "mode": "step", "ticks": 40}),
        json!({"kind": "fault", "id": "3", "fault": "sensor_fail@water(north,upstream)", "on": true}),
        json!({"kind": "command", "id": "4", "action": "EmergencyBarrierCommand(activate)"}),
        json!({"kind": "tick_control", "id": "5", "mode": "step", "ticks": 60}),
        json!({"kind": "command", "id": "6", "action": "BarrierCommand(command_open)"}),
        json!({"kind": "tick_control", "id": "7", "mode": "step", "ticks": 60}),
    ];
    for msg in script {
        c.send(msg).await;
    }
    let snap = c.snapshot("end").await;
    let params: Vec<(String, String)> = snap["params"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_str().unwrap().to_string()))
        .collect();
    let mut folded = fold(&PlantConfig::full(), &c.trace);
    folded.sort();
    assert!(c.errors.is_empty(), "{:?}", c.errors);
    assert_eq!(params, folded);
    assert_eq!(snap["seq"], c.trace.len() as u64);
}

#[tokio::test]
async fn mutated_build_streams_a_violation() {
    let mut cfg = full();
    cfg.mutation = Some(Mutation::SkipLightRedOnStop);
    let url = start(cfg).await;
    let mut c = Client::connect(&url).await;
    c.hello().await;
    c.send(json!({"kind": "command", "id": "1", "action": "BarrierCommand(command_stop)"}))
        .await;
    c.send(json!({"kind": "tick_control", "id": "2", "mode": "step", "ticks": 30}))
        .await;
    let msgs = c.until(|v| v["kind"] == "violation").await;
    let v = msgs.last().unwrap();
    assert_eq!(v["requirement"], "commandreq3");
    assert_eq!(v["title"], "Stop command for the barrier");
    assert!(v["witness"].as_u64().unwrap() < c.trace.len() as u64);
}

#[tokio::test]
async fn recorded_sessions_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = full();
    cfg.record_dir = Some(dir.path().to_path_buf());
    cfg.seed = 9;
    let url = start(cfg).await;

    // An empty session leaves an empty trace file.
    let mut empty = Client::connect(&url).await;
    let ack = empty.hello().await;
    let empty_trace = ack["recording"]["trace"].as_str().unwrap().to_string();

    let mut c = Client::connect(&url).await;
    c.send(json!({"kind": "hello", "v": 1, "id": "h", "profile":
        {"sensor_fail": 0.01, "stuck_aspect": 0.01, "motor_stall": 0.01, "repair": 0.05}}))
        .await;
    let ack = c.expect().await;
    let trace_path = ack["recording"]["trace"].as_str().unwrap().to_string();
    let scenario_path = ack["recording"]["scenario"].as_str().unwrap().to_string();
    assert_ne!(trace_path, empty_trace);
    for msg in [
        json!({"kind": "command", "id": "1", "action": "PaddleCommand(south,downstream,command_open)"}),
        json!({"kind": "tick_control", "id": "2", "mode": "step", "ticks": 300}),
        json!({"kind": "command", "id": "3", "action": "EmergencyLockCommand(south,activate)"}),
        json!({"kind": "tick_control", "id": "4", "mode": "step", "ticks": 200}),
    ] {
        c.send(msg).await;
    }
    c.snapshot("s").await;
    assert!(c.errors.is_empty(), "{:?}", c.errors);
    c.ws.close(None).await.unwrap();
    empty.ws.close(None).await.unwrap();
    // Wait for the server to write the end lines.
    let mut text = String::new();
    for _ in 0..100 {
        text = std::fs::read_to_string(&scenario_path).unwrap();
        if text.contains(" end") {
            break;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
    assert!(text.starts_with("seed 9\nprofile "), "{text}");
    assert!(text.trim_end().ends_with("500 end"), "{text}");

    let recorded = std::fs::read_to_string(&trace_path).unwrap();
    let streamed: String = c
        .trace
        .iter()
        .map(|(seq, a)| {
            let kind = lockctl_core::trace::EventKind::of(&a.parse::<Action>().unwrap());
            format!("{seq} {kind} {a}\n")
        })
        .collect();
    assert_eq!(recorded, streamed);

    let sc: Scenario = text.parse().unwrap();
    assert!(sc.events.iter().any(
        |(_, e)| matches!(e, lockctl_core::sim::ScenarioEvent::Command(a) if a.kind().class() == ActionClass::Command)
    ));
    let replayed: String = replay(Controller::new(&PlantConfig::full()), &sc, None)
        .unwrap()
        .iter()
        .map(|e| format!("{e}\n"))
        .collect();
    assert_eq!(replayed, recorded);
    assert_eq!(std::fs::read_to_string(&empty_trace).unwrap(), "");
}
