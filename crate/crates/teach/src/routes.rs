use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::hub::{Batch, DEFAULT_REPLAY_CAPACITY};
use crate::protocol::{
    ClientBody, ClientMessage, ControlRequest, Envelope, FeedbackRequest, Reply, ReplyBody,
    ServerMessage, Status, PROTOCOL_VERSION,
};
use crate::session::{Session, SessionError, SessionRequest, SessionStatus};

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub replay_capacity: usize,
    /// Directory for per-session JSONL event logs; none disables logging.
    pub log_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            replay_capacity: DEFAULT_REPLAY_CAPACITY,
            log_dir: None,
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Session>>>>,
    config: Arc<ServiceConfig>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            sessions: Arc::default(),
            config: Arc::new(config),
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or(ApiError::UnknownSession)
    }
}

#[derive(Debug)]
pub enum ApiError {
    UnknownSession,
    Session(SessionError),
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError::Session(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, message) = match self {
            ApiError::UnknownSession => (StatusCode::NOT_FOUND, "unknown session".to_string()),
            ApiError::Session(e @ SessionError::Finished) => (StatusCode::CONFLICT, e.to_string()),
            ApiError::Session(e) => (StatusCode::BAD_REQUEST, e.to_string()),
        };
        (code, Json(json!({ "v": PROTOCOL_VERSION, "error": message }))).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(status))
        .route("/sessions/{id}/control", post(control))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(state)
}

#[derive(Debug, Serialize)]
struct Created {
    v: u32,
    id: String,
    status: Status,
}

async fn create(
    State(state): State<AppState>,
    Json(req): Json<SessionRequest>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let config = req.validate()?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let cfg = state.config.clone();
    let sid = id.clone();
    let session = tokio::task::spawn_blocking(move || {
        Session::start(sid, config, cfg.replay_capacity, cfg.log_dir.as_deref())
    })
    .await
    .expect("session start does not panic")?;
    state.sessions.write().unwrap().insert(id.clone(), session);
    Ok((
        StatusCode::CREATED,
        Json(Created {
            v: PROTOCOL_VERSION,
            id,
            status: Status::Paused,
        }),
    ))
}

async fn status(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionStatus>, ApiError> {
    Ok(Json(state.session(&id)?.status()))
}

fn control_reply(session: &Session, req: ControlRequest) -> Reply {
    match session.control(req.cmd, req.value) {
        Ok((status, speed)) => ReplyBody::ControlResult { status, speed }.into(),
        Err(e) => ReplyBody::Error {
            message: e.to_string(),
        }
        .into(),
    }
}

async fn control(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<ControlRequest>,
) -> Result<Json<Reply>, ApiError> {
    let session = state.session(&id)?;
    // stopping joins the learner thread
    let result = tokio::task::spawn_blocking(move || session.control(req.cmd, req.value))
        .await
        .expect("control does not panic")?;
    Ok(Json(
        ReplyBody::ControlResult {
            status: result.0,
            speed: result.1,
        }
        .into(),
    ))
}

fn feedback_reply(session: &Session, req: FeedbackRequest) -> Reply {
    let result = session.submit_feedback(req.step, req.sign);
    ReplyBody::FeedbackResult {
        step: req.step,
        accepted: result.is_ok(),
        reason: result.err().map(|r| r.as_str().to_string()),
    }
    .into()
}

async fn feedback(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<FeedbackRequest>,
) -> Result<Json<Reply>, ApiError> {
    let session = state.session(&id)?;
    Ok(Json(feedback_reply(&session, req)))
}

#[derive(Debug, Deserialize)]
struct FromQuery {
    #[serde(default)]
    from: u64,
}

#[derive(Debug, Serialize)]
struct EventPage {
    v: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<Reply>,
    events: Vec<Envelope>,
    next: u64,
}

fn gap_reply(batch: &Batch) -> Option<Reply> {
    batch
        .gap
        .map(|(from, to)| ReplyBody::Gap { from, to }.into())
}

async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FromQuery>,
) -> Result<Json<EventPage>, ApiError> {
    let batch = state.session(&id)?.hub().read_from(q.from);
    Ok(Json(EventPage {
        v: PROTOCOL_VERSION,
        gap: gap_reply(&batch),
        events: batch.events,
        next: batch.next,
    }))
}

async fn stream(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<FromQuery>,
    ws: WebSocketUpgrade,
) -> Result<Response, ApiError> {
    let session = state.session(&id)?;
    Ok(ws.on_upgrade(move |socket| pump(socket, session, q.from)))
}

async fn send(socket: &mut WebSocket, msg: &ServerMessage) -> bool {
    let text = serde_json::to_string(msg).expect("messages serialise");
    socket.send(Message::Text(text.into())).await.is_ok()
}

/// Forward the session's events from `cursor` on and answer the client's
/// feedback and control messages, until either side goes away.
async fn pump(mut socket: WebSocket, session: Arc<Session>, mut cursor: u64) {
    let mut changes = session.hub().subscribe();
    loop {
        changes.mark_unchanged();
        let batch = session.hub().read_from(cursor);
        if let Some(gap) = gap_reply(&batch) {
            if !send(&mut socket, &ServerMessage::Reply(gap)).await {
                return;
            }
        }
        for e in batch.events {
            if !send(&mut socket, &ServerMessage::Event(e)).await {
                return;
            }
        }
        cursor = batch.next;
        if session.hub().next_seq() > cursor {
            continue;
        }
        tokio::select! {
            changed = changes.changed() => {
                if changed.is_err() {
                    return;
                }
            }
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                    Some(Ok(_)) => continue,
                };
                let reply = match serde_json::from_str::<ClientMessage>(&text) {
                    Ok(m) if m.v != PROTOCOL_VERSION => ReplyBody::Error {
                        message: format!("unsupported protocol version {}", m.v),
                    }
                    .into(),
                    Ok(ClientMessage { body: ClientBody::Feedback(f), .. }) => {
                        feedback_reply(&session, f)
                    }
                    Ok(ClientMessage { body: ClientBody::Control(c), .. }) => {
                        let s = session.clone();
                        tokio::task::spawn_blocking(move || control_reply(&s, c))
                            .await
                            .expect("control does not panic")
                    }
                    Err(e) => ReplyBody::Error { message: e.to_string() }.into(),
                };
                if !send(&mut socket, &ServerMessage::Reply(reply)).await {
                    return;
                }
            }
        }
    }
}
