//! HTTP/JSON service over a store of in-memory sessions.
//!
//! Re-alignment runs on a blocking worker; the request returns `202` at
//! once and clients poll `GET /sessions/{id}` for progress.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, MutexGuard};

use alignkit_core::{ConstraintSet, ScoreBreakdown, SearchConfig, Weights};
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::export::{grid_json, render_table, Format};
use crate::session::{Session, SessionError, SharedProvider, Status};
use crate::wire::{WireError, WireOp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
        }
    }

    fn unknown_session(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UnknownSession", format!("no session {id:?}"))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::Busy => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<WireError> for ApiError {
    fn from(e: WireError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "BadRequest", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "code": self.code, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Inner {
    provider: SharedProvider,
    weights: Weights,
    search_cfg: SearchConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

/// Shared service state: the embedding provider, defaults for new
/// sessions and the session store.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(provider: SharedProvider, weights: Weights, search_cfg: SearchConfig) -> Self {
        Self(Arc::new(Inner {
            provider,
            weights,
            search_cfg,
            sessions: Mutex::new(HashMap::new()),
        }))
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        lock(&self.0.sessions).get(id).cloned().ok_or_else(|| ApiError::unknown_session(id))
    }

    fn insert(&self, session: Session) -> (String, Arc<Mutex<Session>>) {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let handle = Arc::new(Mutex::new(session));
        lock(&self.0.sessions).insert(id.clone(), handle.clone());
        (id, handle)
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

#[derive(Debug, Serialize)]
pub struct Progress {
    pub done: usize,
    pub limit: usize,
}

/// Wire form of a session. Rows and columns are numbered from 1.
#[derive(Debug, Serialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub source_texts: Vec<String>,
    pub rows: usize,
    pub cols: usize,
    pub grid: serde_json::Value,
    pub locked_columns: Vec<usize>,
    pub score: ScoreBreakdown,
    pub status: &'static str,
    pub progress: Option<Progress>,
    pub changed_cells: Vec<[usize; 2]>,
    pub can_undo: bool,
    pub can_redo: bool,
    pub weights: Weights,
    pub search_cfg: SearchConfig,
}

fn snapshot(state: &AppState, id: &str, s: &Session) -> SessionSnapshot {
    let (status, progress) = match s.status() {
        Status::Idle => ("idle", None),
        Status::Searching { done, limit } => ("searching", Some(Progress { done, limit })),
    };
    let a = s.alignment();
    SessionSnapshot {
        id: id.to_owned(),
        source_texts: a.source_texts().to_vec(),
        rows: a.rows(),
        cols: a.cols(),
        grid: grid_json(a),
        locked_columns: s.constraints().iter().map(|c| c + 1).collect(),
        score: s.score(state.0.provider.as_ref()),
        status,
        progress,
        changed_cells: s.changed_cells().iter().map(|&(r, c)| [r + 1, c + 1]).collect(),
        can_undo: s.can_undo(),
        can_redo: s.can_redo(),
        weights: *s.weights(),
        search_cfg: *s.search_cfg(),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/import", post(import_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/ops", post(apply_op))
        .route("/sessions/{id}/realign", post(realign))
        .route("/sessions/{id}/cancel", post(cancel))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/redo", post(redo))
        .route("/sessions/{id}/locks", put(set_locks))
        .route("/sessions/{id}/config", put(set_config))
        .route("/sessions/{id}/score", get(score))
        .route("/sessions/{id}/export", get(export))
        .with_state(state)
}

pub async fn serve(state: AppState, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigBody {
    weights: Option<Weights>,
    search_cfg: Option<SearchConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateBody {
    texts: Vec<String>,
    #[serde(default)]
    config: ConfigBody,
}

async fn create_session(State(state): State<AppState>, body: Result<Json<CreateBody>, JsonRejection>) -> ApiResult<(StatusCode, Json<SessionSnapshot>)> {
    let Json(body) = body?;
    let weights = body.config.weights.unwrap_or(state.0.weights);
    let search_cfg = body.config.search_cfg.unwrap_or(state.0.search_cfg);
    let provider = state.0.provider.clone();
    let session = tokio::task::spawn_blocking(move || Session::create(&body.texts, provider.as_ref(), weights, search_cfg))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))??;
    let (id, handle) = state.insert(session);
    let snap = snapshot(&state, &id, &lock(&handle));
    Ok((StatusCode::CREATED, Json(snap)))
}

async fn import_session(State(state): State<AppState>, body: Result<Json<serde_json::Value>, JsonRejection>) -> ApiResult<(StatusCode, Json<SessionSnapshot>)> {
    let Json(doc) = body?;
    let session = Session::load_value(doc)?;
    let (id, handle) = state.insert(session);
    let snap = snapshot(&state, &id, &lock(&handle));
    Ok((StatusCode::CREATED, Json(snap)))
}

/// Runs `f` on the session and answers with the resulting snapshot.
fn mutate(state: &AppState, id: &str, f: impl FnOnce(&mut Session) -> Result<(), ApiError>) -> ApiResult<Json<SessionSnapshot>> {
    let handle = state.session(id)?;
    let mut session = lock(&handle);
    f(&mut session)?;
    Ok(Json(snapshot(state, id, &session)))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionSnapshot>> {
    mutate(&state, &id, |_| Ok(()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpBody {
    op: WireOp,
}

async fn apply_op(State(state): State<AppState>, Path(id): Path<String>, body: Result<Json<OpBody>, JsonRejection>) -> ApiResult<Json<SessionSnapshot>> {
    let Json(body) = body?;
    let op = body.op.to_op()?;
    mutate(&state, &id, |s| Ok(s.apply_user_op(&op)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealignBody {
    steps: Option<usize>,
}

async fn realign(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Option<Json<RealignBody>>,
) -> ApiResult<(StatusCode, Json<SessionSnapshot>)> {
    let handle = state.session(&id)?;
    let steps = body.and_then(|Json(b)| b.steps).unwrap_or(SearchConfig::STANDARD_STEPS);
    let (job, snap) = {
        let mut session = lock(&handle);
        let job = session.begin_realign(steps)?;
        let snap = snapshot(&state, &id, &session);
        (job, snap)
    };
    let provider = state.0.provider.clone();
    tokio::task::spawn_blocking(move || {
        let result = job.run(provider.as_ref());
        // A failed search only restores the idle state.
        let _ = lock(&handle).finish_realign(job, result);
    });
    Ok((StatusCode::ACCEPTED, Json(snap)))
}

async fn cancel(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionSnapshot>> {
    mutate(&state, &id, |s| {
        if let Some(progress) = s.search_progress() {
            progress.cancel();
        }
        Ok(())
    })
}

async fn undo(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionSnapshot>> {
    mutate(&state, &id, |s| Ok(s.undo()?))
}

async fn redo(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionSnapshot>> {
    mutate(&state, &id, |s| Ok(s.redo()?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocksBody {
    locked_columns: Vec<usize>,
}

async fn set_locks(State(state): State<AppState>, Path(id): Path<String>, body: Result<Json<LocksBody>, JsonRejection>) -> ApiResult<Json<SessionSnapshot>> {
    let Json(body) = body?;
    let locks = body
        .locked_columns
        .iter()
        .map(|&c| c.checked_sub(1).ok_or(WireError::ZeroColumn))
        .collect::<Result<ConstraintSet, _>>()?;
    mutate(&state, &id, |s| Ok(s.set_locks(locks)?))
}

async fn set_config(State(state): State<AppState>, Path(id): Path<String>, body: Result<Json<ConfigBody>, JsonRejection>) -> ApiResult<Json<SessionSnapshot>> {
    let Json(body) = body?;
    mutate(&state, &id, |s| Ok(s.set_config(body.weights, body.search_cfg)?))
}

async fn score(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<ScoreBreakdown>> {
    let handle = state.session(&id)?;
    let session = lock(&handle);
    Ok(Json(session.score(state.0.provider.as_ref())))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(State(state): State<AppState>, Path(id): Path<String>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let handle = state.session(&id)?;
    let session = lock(&handle);
    let format = q.format.as_deref().unwrap_or("tsv");
    let (content_type, body) = match format {
        "save" => ("application/json", session.save_json()),
        other => {
            let f: Format = other.parse().map_err(|m: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "BadFormat", m))?;
            let content_type = match f {
                Format::Tsv => "text/tab-separated-values; charset=utf-8",
                Format::Json => "application/json",
                Format::Html => "text/html; charset=utf-8",
            };
            (content_type, render_table(session.alignment(), f))
        }
    };
    Ok(([(header::CONTENT_TYPE, content_type)], body).into_response())
}
