//! HTTP front end over in-memory sessions.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | [`SessionRequest`] | [`SessionCreated`] |
//! | GET | `/sessions/{id}/instances` | | `instances.json` array |
//! | POST | `/sessions/{id}/pose` | `{x, y, heading}` | [`PoseUpdate`] |
//! | POST | `/sessions/{id}/query/avoid` | `{range}` | [`AvoidanceAnswer`] |
//! | POST | `/sessions/{id}/query/find` | `{class, corridor_halfwidth?}` | [`FindAnswer`] |
//! | GET | `/sessions/{id}/topview` | | [`TopViewScene`] |
//! | GET | `/sessions/{id}/events` | | server-sent [`SimEvent`]s |
//!
//! Errors come back as `{"error": message, "stage": stage}` with status 404
//! for an unknown session and 400 for anything the pipeline rejects.
//!
//! [`AvoidanceAnswer`]: crate::assist::AvoidanceAnswer
//! [`FindAnswer`]: crate::assist::FindAnswer
//! [`TopViewScene`]: crate::topview::TopViewScene

use std::collections::HashMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, Mutex};

use crate::assist::{AvoidanceQuery, FindQuery};
use crate::session::{Session, SessionRequest, SimEvent};
use crate::topview::Pose2D;

const EVENT_BUFFER: usize = 1024;

struct Entry {
    session: Mutex<Session>,
    events: broadcast::Sender<SimEvent>,
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Entry>>>>,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        self.sessions
            .read()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub error: String,
    pub stage: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn not_found(id: &str) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            body: ErrorBody { error: format!("unknown session {id}"), stage: "session".into() },
        }
    }

    fn bad_request(stage: &str, msg: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, body: ErrorBody { error: msg.into(), stage: stage.into() } }
    }
}

impl From<crate::Error> for ApiError {
    fn from(e: crate::Error) -> Self {
        ApiError::bad_request(e.stage(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request("request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// JSON reply with the exact bytes of the library's serialization.
fn json_text(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("reply serializes")
}

fn publish(entry: &Entry, events: Vec<SimEvent>) {
    for e in events {
        // no subscribers is fine
        let _ = entry.events.send(e);
    }
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<SessionRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body?;
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed) + 1);
    let sid = id.clone();
    let session = tokio::task::spawn_blocking(move || Session::create(sid, &req))
        .await
        .map_err(|e| ApiError::bad_request("internal", e.to_string()))??;
    let report = session.created_report();
    let (tx, _) = broadcast::channel(EVENT_BUFFER);
    state
        .sessions
        .write()
        .expect("session map lock")
        .insert(id, Arc::new(Entry { session: Mutex::new(session), events: tx }));
    Ok((StatusCode::CREATED, json_text(to_json(&report))).into_response())
}

async fn instances(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state.get(&id)?;
    let s = entry.session.lock().await;
    Ok(json_text(s.instances_json()))
}

async fn topview(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state.get(&id)?;
    let mut s = entry.session.lock().await;
    Ok(json_text(to_json(&s.topview()?)))
}

async fn pose(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<Pose2D>, JsonRejection>,
) -> Result<Response, ApiError> {
    let entry = state.get(&id)?;
    let Json(p) = body?;
    let mut s = entry.session.lock().await;
    let (update, events) = s.update_pose(p)?;
    publish(&entry, events);
    Ok(json_text(to_json(&update)))
}

async fn query_avoid(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<AvoidanceQuery>, JsonRejection>,
) -> Result<Response, ApiError> {
    let entry = state.get(&id)?;
    let Json(q) = body?;
    let q = AvoidanceQuery::new(q.range).map_err(|e| ApiError::bad_request("query", e))?;
    let mut s = entry.session.lock().await;
    let (answer, events) = s.query_avoid(&q)?;
    publish(&entry, events);
    Ok(json_text(to_json(&answer)))
}

async fn query_find(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<FindQuery>, JsonRejection>,
) -> Result<Response, ApiError> {
    let entry = state.get(&id)?;
    let Json(q) = body?;
    let mut s = entry.session.lock().await;
    let (answer, events) = s.query_find(&q)?;
    publish(&entry, events);
    Ok(json_text(to_json(&answer)))
}

fn sse_event(e: &SimEvent) -> Event {
    let kind = serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    Event::default().event(kind).id(e.seq.to_string()).data(to_json(e))
}

/// Replays the log so far, then follows new events.
async fn events(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let entry = state.get(&id)?;
    // subscribe under the session lock so nothing falls between replay and live
    let (backlog, rx) = {
        let s = entry.session.lock().await;
        (s.events().to_vec(), entry.events.subscribe())
    };
    let next_seq = backlog.last().map_or(0, |e| e.seq + 1);
    let replay = stream::iter(backlog.into_iter().map(|e| Ok(sse_event(&e))));
    let live = stream::unfold((rx, next_seq), |(mut rx, want)| async move {
        loop {
            match rx.recv().await {
                Ok(e) if e.seq < want => continue,
                Ok(e) => {
                    let next = e.seq + 1;
                    return Some((Ok(sse_event(&e)), (rx, next)));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    Ok(Sse::new(replay.chain(live)).keep_alive(KeepAlive::default()))
}

/// Router with every endpoint; `static_dir`, when given, is served at `/`.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/instances", get(instances))
        .route("/sessions/{id}/pose", post(pose))
        .route("/sessions/{id}/query/avoid", post(query_avoid))
        .route("/sessions/{id}/query/find", post(query_find))
        .route("/sessions/{id}/topview", get(topview))
        .route("/sessions/{id}/events", get(events))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Binds and serves until the process ends.
pub async fn serve(addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(), static_dir)).await
}
