//! HTTP API and event stream for the trainer console.
//!
//! Each session sits behind its own async mutex, so commands to one session
//! apply in arrival order and every response reflects a single step. While a
//! session runs, a background task takes one step per tick interval. Events
//! are fanned out to stream subscribers after every mutation.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use rescue_core::rulesets;
use rescue_core::service::{Command, LoggedEvent, ServiceError, Session, Status, UpdateSubject};
use rescue_core::sim::generate::{generate, preset};
use rescue_core::sim::ScenarioConfig;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{broadcast, Mutex};

struct Inner {
    session: Session,
    /// Next event sequence number not yet broadcast.
    published: u64,
    runner: bool,
}

struct Handle {
    inner: Mutex<Inner>,
    events: broadcast::Sender<LoggedEvent>,
}

impl Handle {
    fn publish(&self, inner: &mut Inner) {
        for e in inner.session.events_since(inner.published) {
            // no subscribers is fine
            let _ = self.events.send(e.clone());
            inner.published = e.seq + 1;
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<std::sync::Mutex<BTreeMap<String, Arc<Handle>>>>,
    next_id: Arc<AtomicU64>,
    tick: Duration,
}

impl AppState {
    /// `tick` is the pause between steps of a running session.
    pub fn new(tick: Duration) -> Self {
        AppState {
            sessions: Arc::default(),
            next_id: Arc::new(AtomicU64::new(1)),
            tick,
        }
    }

    fn handle(&self, id: &str) -> Result<Arc<Handle>, ApiError> {
        self.sessions
            .lock()
            .expect("session table")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session `{id}`")))
    }
}

pub struct ApiError(StatusCode, String);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        use ServiceError::*;
        let code = match &e {
            NotPaused(_) | Inconsistent(_) => StatusCode::CONFLICT,
            UnknownEntity { .. } | UnknownTree(_) | UnknownUpdate(_) => StatusCode::NOT_FOUND,
            TimeOutOfRange { .. } => StatusCode::BAD_REQUEST,
            Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError(code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/control", post(control))
        .route("/sessions/{id}/state", get(query_state))
        .route("/sessions/{id}/goals", get(goals))
        .route("/sessions/{id}/rdr/{tree}", get(rdr_tree))
        .route("/sessions/{id}/updates", post(begin_update))
        .route("/sessions/{id}/updates/{uid}/commit", post(commit_update))
        .route("/sessions/{id}/updates/{uid}", delete(discard_update))
        .route("/sessions/{id}/ruleset/{direction}", post(ruleset))
        .route("/sessions/{id}/events", get(events))
        .with_state(state)
}

/// Where a scenario comes from.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Preset { preset: String },
    Path { path: PathBuf },
    Inline(Box<ScenarioConfig>),
}

/// Where a ruleset comes from; bundled names are `default`, `test_city` and `kobe`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum RulesetSource {
    Bundled { bundled: String },
    Path { path: PathBuf },
    Text { text: String },
}

pub fn bundled_ruleset(name: &str) -> Option<&'static str> {
    match name {
        "default" => Some(rulesets::DEFAULT),
        "test_city" | "test-city" => Some(rulesets::TEST_CITY),
        "kobe" => Some(rulesets::KOBE),
        _ => None,
    }
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub scenario: ScenarioSource,
    pub ruleset: Option<RulesetSource>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
    pub time: u64,
    pub status: Status,
}

fn bad_request(msg: impl ToString) -> ApiError {
    ApiError(StatusCode::BAD_REQUEST, msg.to_string())
}

async fn create_session(
    State(app): State<AppState>,
    Json(req): Json<CreateSession>,
) -> Result<(StatusCode, Json<SessionInfo>), ApiError> {
    let scenario = match req.scenario {
        ScenarioSource::Preset { preset: name } => {
            let counts = preset(&name).ok_or_else(|| bad_request(format!("unknown preset `{name}`")))?;
            generate(&name, counts, req.seed)
        }
        ScenarioSource::Path { path } => ScenarioConfig::load(&path).map_err(bad_request)?,
        ScenarioSource::Inline(config) => *config,
    };
    let ruleset = match req.ruleset {
        None => rulesets::DEFAULT.to_string(),
        Some(RulesetSource::Bundled { bundled }) => bundled_ruleset(&bundled)
            .ok_or_else(|| bad_request(format!("unknown bundled ruleset `{bundled}`")))?
            .to_string(),
        Some(RulesetSource::Path { path }) => std::fs::read_to_string(&path).map_err(bad_request)?,
        Some(RulesetSource::Text { text }) => text,
    };
    let id = format!("s{}", app.next_id.fetch_add(1, Ordering::Relaxed));
    let session = Session::new(id.clone(), scenario, &ruleset, req.seed)?;
    let info = SessionInfo {
        id: id.clone(),
        time: session.time(),
        status: session.status(),
    };
    let (events, _) = broadcast::channel(1024);
    let handle = Arc::new(Handle {
        inner: Mutex::new(Inner {
            session,
            published: 0,
            runner: false,
        }),
        events,
    });
    {
        let mut inner = handle.inner.lock().await;
        handle.publish(&mut inner);
    }
    app.sessions.lock().expect("session table").insert(id, handle);
    Ok((StatusCode::CREATED, Json(info)))
}

async fn control(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(command): Json<Command>,
) -> ApiResult<rescue_core::service::ControlOutcome> {
    let handle = app.handle(&id)?;
    let mut inner = handle.inner.lock().await;
    let result = inner.session.control(command);
    handle.publish(&mut inner);
    let outcome = result?;
    if outcome.status == Status::Running && !inner.runner {
        inner.runner = true;
        tokio::spawn(run_loop(handle.clone(), app.tick));
    }
    Ok(Json(outcome))
}

/// Steps a running session until it pauses.
async fn run_loop(handle: Arc<Handle>, tick: Duration) {
    loop {
        {
            let mut inner = handle.inner.lock().await;
            let stepped = inner.session.run_tick().is_some();
            handle.publish(&mut inner);
            if !stepped {
                inner.runner = false;
                return;
            }
        }
        tokio::time::sleep(tick).await;
    }
}

#[derive(Debug, Deserialize)]
struct AtTime {
    t: Option<u64>,
}

async fn query_state(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<AtTime>,
) -> ApiResult<rescue_core::service::Snapshot> {
    let handle = app.handle(&id)?;
    let inner = handle.inner.lock().await;
    Ok(Json(inner.session.query_state(q.t)?))
}

async fn goals(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<AtTime>,
) -> ApiResult<Vec<rescue_core::service::GoalView>> {
    let handle = app.handle(&id)?;
    let inner = handle.inner.lock().await;
    Ok(Json(inner.session.goals(q.t)?))
}

async fn rdr_tree(
    State(app): State<AppState>,
    Path((id, tree)): Path<(String, String)>,
) -> ApiResult<rescue_core::service::TreeView> {
    let handle = app.handle(&id)?;
    let inner = handle.inner.lock().await;
    Ok(Json(inner.session.tree_view(&tree)?))
}

#[derive(Debug, Deserialize)]
pub struct BeginUpdate {
    pub time: u64,
    #[serde(flatten)]
    pub subject: UpdateSubject,
    pub tree: String,
    pub proposed: String,
}

async fn begin_update(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<BeginUpdate>,
) -> ApiResult<rescue_core::service::UpdateDraft> {
    let handle = app.handle(&id)?;
    let mut inner = handle.inner.lock().await;
    Ok(Json(inner.session.begin_rule_update(
        req.time,
        req.subject,
        &req.tree,
        &req.proposed,
    )?))
}

#[derive(Debug, Deserialize)]
pub struct CommitUpdate {
    pub literal_indices: Vec<usize>,
}

async fn commit_update(
    State(app): State<AppState>,
    Path((id, uid)): Path<(String, u64)>,
    Json(req): Json<CommitUpdate>,
) -> ApiResult<rescue_core::service::CommitSummary> {
    let handle = app.handle(&id)?;
    let mut inner = handle.inner.lock().await;
    let result = inner.session.commit_rule_update(uid, &req.literal_indices);
    handle.publish(&mut inner);
    Ok(Json(result?))
}

async fn discard_update(
    State(app): State<AppState>,
    Path((id, uid)): Path<(String, u64)>,
) -> Result<StatusCode, ApiError> {
    let handle = app.handle(&id)?;
    let mut inner = handle.inner.lock().await;
    inner.session.discard_rule_update(uid)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Default, Deserialize)]
pub struct RulesetRequest {
    pub path: Option<PathBuf>,
    pub text: Option<String>,
}

async fn ruleset(
    State(app): State<AppState>,
    Path((id, direction)): Path<(String, String)>,
    body: Option<Json<RulesetRequest>>,
) -> ApiResult<serde_json::Value> {
    let req = body.map(|Json(b)| b).unwrap_or_default();
    let handle = app.handle(&id)?;
    let mut inner = handle.inner.lock().await;
    match direction.as_str() {
        "save" => match req.path {
            Some(path) => {
                inner.session.save_ruleset(&path)?;
                Ok(Json(json!({ "saved": path })))
            }
            None => Ok(Json(json!({ "text": inner.session.kb().serialize() }))),
        },
        "load" => {
            let result = match (req.path, req.text) {
                (Some(path), _) => inner.session.load_ruleset(&path),
                (None, Some(text)) => inner.session.load_ruleset_text(&text),
                (None, None) => return Err(bad_request("load needs a `path` or `text`")),
            };
            handle.publish(&mut inner);
            result?;
            Ok(Json(
                json!({ "loaded": true, "trees": inner.session.tree_views().len() }),
            ))
        }
        other => Err(ApiError(
            StatusCode::NOT_FOUND,
            format!("unknown ruleset action `{other}`"),
        )),
    }
}

#[derive(Debug, Deserialize)]
struct EventsFrom {
    from: Option<u64>,
}

/// Server-sent events: the backlog from `from` (default 0), then live events.
async fn events(
    State(app): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<EventsFrom>,
) -> Result<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>, ApiError> {
    let handle = app.handle(&id)?;
    let (backlog, rx, next) = {
        let inner = handle.inner.lock().await;
        let rx = handle.events.subscribe();
        let backlog: Vec<LoggedEvent> = inner.session.events_since(q.from.unwrap_or(0)).to_vec();
        let next = backlog
            .last()
            .map_or(inner.published.max(q.from.unwrap_or(0)), |e| e.seq + 1);
        (backlog, rx, next)
    };
    let live = stream::unfold((rx, next), |(mut rx, next)| async move {
        loop {
            match rx.recv().await {
                Ok(e) if e.seq < next => continue,
                Ok(e) => {
                    let n = e.seq + 1;
                    return Some((e, (rx, n)));
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => return None,
            }
        }
    });
    let all = stream::iter(backlog).chain(live).map(|e| Ok(to_sse(&e)));
    Ok(Sse::new(all).keep_alive(KeepAlive::default()))
}

fn to_sse(e: &LoggedEvent) -> SseEvent {
    let kind = match &e.event {
        rescue_core::service::Event::StepCompleted { .. } => "step_completed",
        rescue_core::service::Event::GoalTransition(_) => "goal_transition",
        rescue_core::service::Event::RuleCommitted(_) => "rule_committed",
        rescue_core::service::Event::Rewound { .. } => "rewound",
        rescue_core::service::Event::StatusChanged { .. } => "status_changed",
        rescue_core::service::Event::RulesetLoaded => "ruleset_loaded",
    };
    SseEvent::default()
        .event(kind)
        .id(e.seq.to_string())
        .json_data(&e.event)
        .expect("events serialize")
}
