//! WebSocket session service. Each connection owns one closed-loop session;
//! see `docs/protocol.md` for the messages.

pub mod handler;
pub mod protocol;

use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use tokio::net::TcpListener;
use tokio::time::{Interval, MissedTickBehavior};

pub use handler::{Reply, ServiceConfig, SessionHandler};
pub use protocol::{ClientMessage, ServerMessage, TickOp, PROTOCOL_VERSION};

/// The service routes: the session socket lives at `/ws`.
pub fn router(cfg: Arc<ServiceConfig>) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(cfg)
}

pub async fn serve(listener: TcpListener, cfg: Arc<ServiceConfig>) -> std::io::Result<()> {
    axum::serve(listener, router(cfg)).await
}

async fn upgrade(ws: WebSocketUpgrade, State(cfg): State<Arc<ServiceConfig>>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, cfg))
}

async fn send_all(socket: &mut WebSocket, messages: Vec<ServerMessage>) -> bool {
    for m in messages {
        if socket.send(Message::Text(m.to_json().into())).await.is_err() {
            return false;
        }
    }
    true
}

fn interval_for(rate_hz: f64) -> Interval {
    let mut t = tokio::time::interval(Duration::from_secs_f64(1.0 / rate_hz));
    t.set_missed_tick_behavior(MissedTickBehavior::Skip);
    t
}

async fn next_tick(ticker: &mut Option<Interval>) {
    match ticker {
        Some(t) => {
            t.tick().await;
        }
        None => std::future::pending().await,
    }
}

async fn connection(mut socket: WebSocket, cfg: Arc<ServiceConfig>) {
    let mut handler = SessionHandler::new(cfg);
    let mut ticker: Option<Interval> = None;
    let mut rate = None;
    loop {
        tokio::select! {
            msg = socket.recv() => {
                let reply = match msg {
                    Some(Ok(Message::Text(text))) => handler.handle_text(&text),
                    Some(Ok(Message::Binary(_))) => Reply {
                        messages: vec![ServerMessage::error(None, "binary frames are not supported")],
                        close: false,
                    },
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                if !send_all(&mut socket, reply.messages).await {
                    break;
                }
                if reply.close {
                    let _ = socket.send(Message::Close(None)).await;
                    break;
                }
            }
            () = next_tick(&mut ticker) => {
                let out = handler.auto_tick();
                if !send_all(&mut socket, out).await {
                    break;
                }
            }
        }
        if handler.rate_hz() != rate {
            rate = handler.rate_hz();
            ticker = rate.map(interval_for);
        }
    }
    handler.finish();
    tracing::debug!("session closed");
}
