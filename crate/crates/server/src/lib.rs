//! HTTP front end for live sessions.
//!
//! | route                          | body / reply                          |
//! |--------------------------------|---------------------------------------|
//! | `POST /sessions`               | create request → `201 {"v":1,"session":…}` |
//! | `GET /sessions/{id}/snapshot`  | current snapshot                      |
//! | `POST /sessions/{id}/commands` | one command → ack                     |
//! | `GET /sessions/{id}/stream`    | server-sent events, one message each  |
//! | `GET /sessions/{id}/log`       | command log for offline replay        |
//!
//! Every body is a versioned wire document; errors use the `error` event shape.

mod executor;
pub mod hub;

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::future::Future;
use std::io;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use futures::Stream;
use serde::{Deserialize, Serialize};
use shoal_core::config::SessionConfig;
use shoal_core::control::wire::{self, WireDecode, WireError};
use shoal_core::control::{CommandError, EventMsg, Session, SessionId};
use tokio::net::TcpListener;
use tokio::sync::RwLock;

pub use executor::{Gone, SessionHandle};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Base directory for config files named in create requests and for
    /// relative dispatcher paths in inline configs.
    pub config_root: PathBuf,
    /// Where command logs are written on shutdown; `None` disables flushing.
    pub log_dir: Option<PathBuf>,
    /// Wall-clock time between iterations of a running session.
    pub tick_interval: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            config_root: PathBuf::from("."),
            log_dir: None,
            tick_interval: Duration::from_millis(50),
        }
    }
}

/// Body of `POST /sessions`: an inline config or a file under the config root.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<SessionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl WireDecode for CreateSession {
    fn from_object(map: serde_json::Map<String, serde_json::Value>) -> Result<Self, WireError> {
        wire::plain(map)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Created {
    pub session: SessionId,
}

impl WireDecode for Created {
    fn from_object(map: serde_json::Map<String, serde_json::Value>) -> Result<Self, WireError> {
        wire::plain(map)
    }
}

struct Inner {
    config: ServerConfig,
    sessions: RwLock<BTreeMap<SessionId, SessionHandle>>,
    next_id: AtomicU64,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(config: ServerConfig) -> Self {
        Self(Arc::new(Inner {
            config,
            sessions: RwLock::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        }))
    }

    pub async fn session(&self, id: &SessionId) -> Option<SessionHandle> {
        self.0.sessions.read().await.get(id).cloned()
    }

    pub async fn session_ids(&self) -> Vec<SessionId> {
        self.0.sessions.read().await.keys().cloned().collect()
    }

    /// Validates and starts a session; ids are never reused.
    pub async fn create(&self, request: CreateSession) -> Result<SessionId, ApiError> {
        let root = &self.0.config.config_root;
        let (config, base) = match (request.config, request.config_file) {
            (Some(c), None) => (c, root.clone()),
            (None, Some(file)) => {
                let path = confined(root, &file).ok_or_else(|| {
                    ApiError::bad_request("config_file", format!("{file:?} is outside the config root"))
                })?;
                let config = SessionConfig::load(&path)
                    .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", e.to_string()))?;
                let base = path.parent().map_or_else(|| root.clone(), Path::to_path_buf);
                (config, base)
            }
            _ => {
                return Err(ApiError::bad_request(
                    "config",
                    "exactly one of `config` and `config_file` is required".into(),
                ))
            }
        };
        let id = SessionId(format!("s{}", self.0.next_id.fetch_add(1, Ordering::Relaxed)));
        let session = Session::create(id.clone(), config, request.seed, &base)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_config", e.to_string()))?;
        let handle = SessionHandle::spawn(session, self.0.config.tick_interval);
        self.0.sessions.write().await.insert(id.clone(), handle);
        log::info!("created session {id}");
        Ok(id)
    }

    /// Writes every session's command log to the log directory.
    pub async fn flush_logs(&self) -> io::Result<Vec<PathBuf>> {
        let Some(dir) = &self.0.config.log_dir else {
            return Ok(Vec::new());
        };
        std::fs::create_dir_all(dir)?;
        let sessions: Vec<(SessionId, SessionHandle)> = self
            .0
            .sessions
            .read()
            .await
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut written = Vec::new();
        for (id, handle) in sessions {
            let Ok(log) = handle.log().await else { continue };
            let path = dir.join(format!("{id}.json"));
            std::fs::write(&path, wire::encode_pretty(&log) + "\n")?;
            written.push(path);
        }
        Ok(written)
    }
}

/// `root/rel` if `rel` is a plain relative path that stays under `root`.
fn confined(root: &Path, rel: &str) -> Option<PathBuf> {
    let rel = Path::new(rel);
    rel.components()
        .all(|c| matches!(c, Component::Normal(_) | Component::CurDir))
        .then(|| root.join(rel))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: String) -> Self {
        Self {
            status,
            code: code.into(),
            message,
        }
    }

    fn bad_request(field: &str, message: String) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "schema", format!("at `{field}`: {message}"))
    }

    fn unknown_session(id: &SessionId) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "unknown_session",
            format!("unknown session {id}"),
        )
    }
}

impl From<WireError> for ApiError {
    fn from(e: WireError) -> Self {
        Self::new(StatusCode::BAD_REQUEST, e.code(), e.to_string())
    }
}

impl From<CommandError> for ApiError {
    fn from(e: CommandError) -> Self {
        let status = match e {
            CommandError::UnknownFish(_) => StatusCode::NOT_FOUND,
            CommandError::FishDispatched(_) | CommandError::Finished(_) => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = EventMsg::Error {
            code: self.code,
            message: self.message,
        };
        json(self.status, &body)
    }
}

fn json<T: Serialize>(status: StatusCode, body: &T) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], wire::encode(body)).into_response()
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/snapshot", get(snapshot))
        .route("/sessions/{id}/commands", post(command))
        .route("/sessions/{id}/stream", get(stream))
        .route("/sessions/{id}/log", get(command_log))
        .with_state(state)
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let request: CreateSession = decode_body(&body)?;
    let session = state.create(request).await?;
    Ok(json(StatusCode::CREATED, &Created { session }))
}

async fn handle_for(state: &AppState, id: String) -> Result<SessionHandle, ApiError> {
    let id = SessionId(id);
    state.session(&id).await.ok_or_else(|| ApiError::unknown_session(&id))
}

fn gone() -> ApiError {
    ApiError::new(StatusCode::GONE, "session_gone", "session executor stopped".into())
}

async fn snapshot(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let handle = handle_for(&state, id).await?;
    let snapshot = handle.snapshot().await.map_err(|_| gone())?;
    Ok(json(StatusCode::OK, &snapshot))
}

async fn command(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let handle = handle_for(&state, id).await?;
    let command = decode_body(&body)?;
    let ack = handle.command(command).await.map_err(|_| gone())??;
    Ok(json(StatusCode::OK, &ack))
}

async fn command_log(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let handle = handle_for(&state, id).await?;
    let log = handle.log().await.map_err(|_| gone())?;
    Ok(json(StatusCode::OK, &log))
}

async fn stream(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let handle = handle_for(&state, id).await?;
    let sub = handle.subscribe().await.map_err(|_| gone())?;
    let events = futures::stream::unfold(sub, |sub| async move {
        let msg = sub.recv().await?;
        let event = Event::default().event(event_name(&msg)).data(wire::encode(&msg));
        Some((Ok(event), sub))
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

fn event_name(msg: &EventMsg) -> &'static str {
    match msg {
        EventMsg::Snapshot { .. } => "snapshot",
        EventMsg::JobCompleted { .. } => "job_completed",
        EventMsg::RunFinished { .. } => "run_finished",
        EventMsg::Error { .. } => "error",
    }
}

fn decode_body<T: WireDecode>(body: &[u8]) -> Result<T, ApiError> {
    let text = std::str::from_utf8(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed", format!("body is not UTF-8: {e}")))?;
    Ok(wire::decode(text)?)
}

/// Serves until `shutdown` resolves, then flushes command logs.
pub async fn serve(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, router(state.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    for path in state.flush_logs().await? {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}
