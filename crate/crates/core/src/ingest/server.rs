use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use super::{ExportFilter, IngestError, SessionStore, WireFrame};
use crate::sensor::{HandSide, MotionType};

impl IntoResponse for IngestError {
    fn into_response(self) -> Response {
        let status = match &self {
            IngestError::Invalid { .. } => StatusCode::BAD_REQUEST,
            IngestError::NotFound(_) => StatusCode::NOT_FOUND,
            IngestError::Conflict(_) => StatusCode::CONFLICT,
            IngestError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": self.kind(), "message": self.to_string() });
        if let IngestError::Invalid { field, index, .. } = &self {
            body["field"] = json!(field);
            if let Some(i) = index {
                body["index"] = json!(i);
            }
        }
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<SessionStore>;

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, IngestError> + Send + 'static,
) -> Result<T, IngestError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| IngestError::Storage(e.to_string()))?
}

fn json_body(bytes: &[u8]) -> Result<serde_json::Map<String, Value>, IngestError> {
    match serde_json::from_slice(bytes) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(IngestError::invalid("body", "expected a JSON object")),
        Err(e) => Err(IngestError::invalid("body", e.to_string())),
    }
}

fn label<T: std::str::FromStr>(map: &serde_json::Map<String, Value>, field: &str) -> Result<T, IngestError>
where
    T::Err: std::fmt::Display,
{
    let raw = map.get(field).and_then(Value::as_str).ok_or_else(|| IngestError::invalid(field, "missing or not a string"))?;
    raw.parse().map_err(|e: T::Err| IngestError::invalid(field, e.to_string()))
}

async fn create_session(State(store): State<Shared>, body: Bytes) -> Result<Response, IngestError> {
    let map = json_body(&body)?;
    let respondent: String = match map.get("respondent") {
        Some(Value::String(s)) => s.clone(),
        _ => return Err(IngestError::invalid("respondent", "missing or not a string")),
    };
    let motion: MotionType = label(&map, "motion_type")?;
    let side: HandSide = label(&map, "side")?;
    let id = blocking(move || store.create_session(&respondent, motion, side)).await?;
    Ok((StatusCode::CREATED, Json(json!({ "session_id": id, "status": "open" }))).into_response())
}

async fn append_frames(
    State(store): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, IngestError> {
    let mut map = json_body(&body)?;
    let batch_seq = match map.get("batch_seq") {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_u64().ok_or_else(|| IngestError::invalid("batch_seq", "must be a non-negative integer"))?),
    };
    let raw = match map.remove("frames") {
        Some(Value::Array(a)) => a,
        _ => return Err(IngestError::invalid("frames", "missing or not an array")),
    };
    let mut frames = Vec::with_capacity(raw.len());
    for (i, v) in raw.into_iter().enumerate() {
        let frame: WireFrame =
            serde_json::from_value(v).map_err(|e| IngestError::at(i, format!("frames[{i}]"), e.to_string()))?;
        frames.push(frame);
    }
    let accepted = blocking(move || store.append_frames(&id, batch_seq, frames)).await?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "accepted": accepted }))).into_response())
}

async fn finish_session(State(store): State<Shared>, Path(id): Path<String>) -> Result<Response, IngestError> {
    let summary = blocking(move || store.finish_session(&id)).await?;
    Ok(Json(summary).into_response())
}

async fn session_info(State(store): State<Shared>, Path(id): Path<String>) -> Result<Response, IngestError> {
    Ok(Json(store.session_info(&id)?).into_response())
}

#[derive(Deserialize)]
struct ExportQuery {
    side: Option<String>,
    motion: Option<String>,
    respondent: Option<String>,
}

fn optional<T: std::str::FromStr>(field: &str, raw: Option<String>) -> Result<Option<T>, IngestError>
where
    T::Err: std::fmt::Display,
{
    match raw.filter(|s| !s.is_empty()) {
        None => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|e: T::Err| IngestError::invalid(field, e.to_string())),
    }
}

async fn export_csv(State(store): State<Shared>, Query(q): Query<ExportQuery>) -> Result<Response, IngestError> {
    let filter = ExportFilter {
        side: optional("side", q.side)?,
        motion: optional("motion", q.motion)?,
        respondent: q.respondent.filter(|s| !s.is_empty()),
    };
    let csv = blocking(move || store.export_csv(&filter)).await?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

async fn health(State(store): State<Shared>) -> Response {
    Json(json!({ "status": "ok", "sessions": store.list().len() })).into_response()
}

/// The `/api/v1` routes, plus static capture-UI assets when `ui_dir` is set.
pub fn router(store: Arc<SessionStore>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/sessions", post(create_session))
        .route("/api/v1/sessions/{id}", get(session_info))
        .route("/api/v1/sessions/{id}/frames", post(append_frames))
        .route("/api/v1/sessions/{id}/finish", post(finish_session))
        .route("/api/v1/export.csv", get(export_csv))
        .with_state(store);
    let app = match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(CorsLayer::permissive())
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    store: Arc<SessionStore>,
    ui_dir: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store, ui_dir)).with_graceful_shutdown(shutdown).await
}

/// A server running on its own thread and runtime, for tests and in-process
/// pipelines. Dropping the handle stops the server.
pub struct ServerHandle {
    pub addr: SocketAddr,
    stop: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    /// Binds `addr` (port 0 picks a free port) and starts serving.
    pub fn start(store: Arc<SessionStore>, addr: SocketAddr) -> std::io::Result<Self> {
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let listener = runtime.block_on(tokio::net::TcpListener::bind(addr))?;
        let addr = listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel();
        let thread = std::thread::spawn(move || {
            runtime.block_on(serve(listener, store, None, async {
                let _ = rx.await;
            }))
        });
        Ok(ServerHandle { addr, stop: Some(tx), thread: Some(thread) })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stop(mut self) -> std::io::Result<()> {
        self.shutdown()
    }

    fn shutdown(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.shutdown();
    }
}
