//! HTTP + WebSocket front end for a [`Session`].
//!
//! * `GET  /v1/ws`         — duplex stream: snapshot first, then every event.
//! * `GET  /v1/snapshot`   — read-only transcript and pool summary.
//! * `POST /v1/segment`    — push one segment record, returns its events.
//! * `POST /v1/correction` — push one feedback message, returns its events.

use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use spkfix_core::engine::SessionEvent;

use crate::formats::SegmentRecord;
use crate::protocol::{parse_client_frame, ClientMessage, ServerFrame, ServerMessage};
use crate::session::Session;

pub fn router(session: Arc<Session>) -> Router {
    Router::new()
        .route("/v1/ws", get(ws_upgrade))
        .route("/v1/snapshot", get(snapshot))
        .route("/v1/segment", post(push_segment))
        .route("/v1/correction", post(push_correction))
        .with_state(session)
}

pub async fn serve(session: Arc<Session>, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router(session)).await
}

/// Engine calls may block on the text gateway, so they run off the reactor.
async fn blocking<R: Send + 'static>(f: impl FnOnce() -> R + Send + 'static) -> Result<R, Response> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response())
}

async fn snapshot(State(s): State<Arc<Session>>) -> Response {
    match blocking(move || s.snapshot()).await {
        Ok(snap) => Json(ServerFrame::new(ServerMessage::Snapshot { snapshot: snap })).into_response(),
        Err(r) => r,
    }
}

async fn push_segment(State(s): State<Arc<Session>>, Json(rec): Json<SegmentRecord>) -> Response {
    match blocking(move || s.push_segment(rec.into_segment())).await {
        Ok(events) => Json(events).into_response(),
        Err(r) => r,
    }
}

#[derive(Deserialize)]
struct CorrectionBody {
    text: String,
}

async fn push_correction(State(s): State<Arc<Session>>, Json(body): Json<CorrectionBody>) -> Response {
    match blocking(move || s.push_feedback(&body.text)).await {
        Ok(events) => Json(events).into_response(),
        Err(r) => r,
    }
}

async fn ws_upgrade(State(s): State<Arc<Session>>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| connection(s, socket))
}

async fn send(socket: &mut WebSocket, msg: ServerMessage) -> bool {
    socket.send(Message::Text(ServerFrame::new(msg).to_text().into())).await.is_ok()
}

async fn connection(session: Arc<Session>, mut socket: WebSocket) {
    let s = session.clone();
    let Ok((snap, mut events)) = blocking(move || s.subscribe()).await else {
        return;
    };
    if !send(&mut socket, ServerMessage::Snapshot { snapshot: snap }).await {
        return;
    }
    loop {
        tokio::select! {
            ev = events.recv() => {
                let Some(event) = ev else { break };
                if !send(&mut socket, ServerMessage::Event { event }).await {
                    break;
                }
            }
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t.to_string(),
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let reply = match parse_client_frame(&text) {
                    Err(message) => Some(ServerMessage::ProtocolError { message }),
                    Ok(msg) => handle(&session, msg).await,
                };
                if let Some(r) = reply {
                    if !send(&mut socket, r).await {
                        break;
                    }
                }
            }
        }
    }
}

/// Resulting events reach this client through its subscription, in order
/// with everyone else's; only snapshots are answered directly.
async fn handle(session: &Arc<Session>, msg: ClientMessage) -> Option<ServerMessage> {
    let s = session.clone();
    let out: Result<Option<ServerMessage>, Response> = match msg {
        ClientMessage::Segment { segment } => blocking(move || {
            let _: Vec<SessionEvent> = s.push_segment(segment.into_segment());
            None
        })
        .await,
        ClientMessage::Correction { text } => blocking(move || {
            s.push_feedback(&text);
            None
        })
        .await,
        ClientMessage::Snapshot => blocking(move || Some(ServerMessage::Snapshot { snapshot: s.snapshot() })).await,
    };
    out.unwrap_or_else(|_| Some(ServerMessage::ProtocolError { message: "internal error".to_string() }))
}
