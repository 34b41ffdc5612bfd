//! HTTP API hosting live teaching sessions.
//!
//! Each session owns one event log file under the data directory. An event
//! is applied to a copy of the session, appended to the log, and only then
//! committed and answered. On startup existing logs are replayed so sessions
//! survive a restart.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lfd_feedback::eventlog::{now_seconds, read_log, replay, EventLog};
use lfd_feedback::explainer::ExplanationSample;
use lfd_feedback::gridworld::{Action, Cell, GridSpec};
use lfd_feedback::irl::IrlConfig;
use lfd_feedback::metrics::compute_report;
use lfd_feedback::planner::PlannerConfig;
use lfd_feedback::protocol::{
    Condition, Event, GoalLabel, Outcome, Phase, Prediction, PredictionKind, SessionConfig,
    SessionState, Stage, StudySetup, SurveyResponse,
};
use lfd_feedback::simteacher::target_for;
use lfd_feedback::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;

/// Error body: `{"error": ..., "phase": ...}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    phase: Option<Phase>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
            phase: None,
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown session {id}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, phase) = match &e {
            Error::IllegalEvent { phase, .. } => (StatusCode::CONFLICT, Some(*phase)),
            Error::SessionNotDone(phase) => (StatusCode::CONFLICT, Some(*phase)),
            Error::InvalidConfig(_)
            | Error::InvalidGrid(_)
            | Error::InvalidCell(_)
            | Error::GoalProbe(_) => (StatusCode::BAD_REQUEST, None),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, None),
        };
        Self {
            status,
            message: e.to_string(),
            phase,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.message, "phase": self.phase });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

struct Live {
    session: SessionState,
    log: EventLog,
    /// Unix seconds at creation; bounds client-reported durations.
    created_at: f64,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    data_dir: PathBuf,
    defaults: StudySetup,
    sessions: Mutex<HashMap<String, Arc<Mutex<Live>>>>,
}

impl AppState {
    /// Opens `data_dir`, replaying any session logs already in it. New
    /// sessions start from `defaults` unless the create request overrides.
    pub fn open(data_dir: impl AsRef<Path>, defaults: StudySetup) -> lfd_feedback::Result<Self> {
        let data_dir = data_dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&data_dir)?;
        let mut sessions = HashMap::new();
        for entry in std::fs::read_dir(&data_dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let records = read_log(&path)?;
            let restored = replay(&records)?;
            let log = EventLog::reopen(&path, &restored.session_id, records.len() as u64)?;
            let live = Live {
                session: restored.session,
                log,
                created_at: records[0].timestamp,
            };
            sessions.insert(restored.session_id, Arc::new(Mutex::new(live)));
        }
        Ok(Self {
            inner: Arc::new(Inner {
                data_dir,
                defaults,
                sessions: Mutex::new(sessions),
            }),
        })
    }

    async fn live(&self, id: &str) -> Result<Arc<Mutex<Live>>, ApiError> {
        self.inner
            .sessions
            .lock()
            .await
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(view))
        .route("/sessions/{id}/demo/reset", post(demo_reset))
        .route("/sessions/{id}/demo/step", post(demo_step))
        .route("/sessions/{id}/set/complete", post(set_complete))
        .route("/sessions/{id}/explanation/ack", post(explanation_ack))
        .route("/sessions/{id}/prediction", post(prediction))
        .route("/sessions/{id}/survey", post(survey))
        .route("/sessions/{id}/report", get(report))
        .route("/sessions/{id}/log", get(log))
        .with_state(state)
}

pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttemptView {
    pub start: Cell,
    pub robot: Cell,
    pub budget: usize,
    pub budget_remaining: i64,
    pub steps: usize,
    pub target_hint: GoalLabel,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeView {
    pub index: usize,
    pub cell: Cell,
    pub answered: bool,
}

/// Everything a client needs to render the session.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClientView {
    pub session_id: String,
    pub phase: Phase,
    pub stage: Option<Stage>,
    pub condition: Condition,
    pub grid: GridSpec,
    pub attempt: Option<AttemptView>,
    pub valid_in_set: usize,
    pub demos_per_set: usize,
    pub demo_sets_completed: usize,
    pub performance_history: Vec<f64>,
    pub pending_probes: Vec<ProbeView>,
    pub explanations: Option<ExplanationSample>,
    pub allowed_events: Vec<String>,
}

fn client_view(id: &str, s: &SessionState) -> ClientView {
    let setup = s.setup();
    let attempt = s.attempt().map(|a| {
        let target_hint = match target_for(&setup.grid, a.start, a.budget) {
            Ok((t, _)) if t == setup.grid.preferred_goal => GoalLabel::Preferred,
            Ok(_) => GoalLabel::NonPreferred,
            Err(_) => GoalLabel::NoGoal,
        };
        AttemptView {
            start: a.start,
            robot: a.position(),
            budget: a.budget,
            budget_remaining: a.budget_remaining(),
            steps: a.actions.len(),
            target_hint,
        }
    });
    ClientView {
        session_id: id.to_string(),
        phase: s.phase(),
        stage: s.stage(),
        condition: setup.session.condition,
        grid: setup.grid.clone(),
        attempt,
        valid_in_set: s.valid_in_current_set(),
        demos_per_set: setup.session.demos_per_set,
        demo_sets_completed: s.demo_sets_completed(),
        performance_history: s.performance_history().to_vec(),
        pending_probes: s
            .pending_probes()
            .into_iter()
            .enumerate()
            .map(|(index, (cell, answered))| ProbeView {
                index,
                cell,
                answered,
            })
            .collect(),
        explanations: s.explanations().cloned(),
        allowed_events: s.allowed_events().iter().map(|e| e.to_string()).collect(),
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub condition: Option<Condition>,
    pub seed: Option<u64>,
    pub grid: Option<GridSpec>,
    pub session: Option<SessionConfig>,
    pub irl: Option<IrlConfig>,
    pub planner: Option<PlannerConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Created {
    pub session_id: String,
    pub view: ClientView,
}

async fn create(
    State(state): State<AppState>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let Json(req) = body?;
    let mut setup = state.inner.defaults.clone();
    if let Some(session) = req.session {
        setup.session = session;
    }
    if let Some(grid) = req.grid {
        setup.grid = grid;
    }
    if let Some(irl) = req.irl {
        setup.irl = irl;
    }
    if let Some(planner) = req.planner {
        setup.planner = planner;
    }
    if let Some(c) = req.condition {
        setup.session.condition = c;
    }
    if let Some(seed) = req.seed {
        setup.session.seed = seed;
    }
    setup.validate()?;
    let id = uuid::Uuid::new_v4().simple().to_string();
    let created_at = now_seconds();
    let path = state.inner.data_dir.join(format!("{id}.jsonl"));
    let (session, log) = tokio::task::spawn_blocking(move || -> lfd_feedback::Result<_> {
        let session = SessionState::new(setup.clone())?;
        let log = EventLog::create(&path, &id, &setup)?;
        Ok((session, log))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let id = log.session_id().to_string();
    let view = client_view(&id, &session);
    let live = Live {
        session,
        log,
        created_at,
    };
    state
        .inner
        .sessions
        .lock()
        .await
        .insert(id.clone(), Arc::new(Mutex::new(live)));
    Ok((
        StatusCode::CREATED,
        Json(Created {
            session_id: id,
            view,
        }),
    ))
}

async fn view(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<ClientView> {
    let live = state.live(&id).await?;
    let live = live.lock().await;
    Ok(Json(client_view(&id, &live.session)))
}

/// Applies `event` off the async runtime, persists it, then commits.
async fn apply(
    state: &AppState,
    id: &str,
    event: impl FnOnce(&Live) -> Event,
) -> Result<(Outcome, ClientView), ApiError> {
    let live = state.live(id).await?;
    let mut guard = live.lock_owned().await;
    let event = event(&guard);
    let id = id.to_string();
    tokio::task::spawn_blocking(move || -> Result<_, ApiError> {
        let live = &mut *guard;
        let mut next = live.session.clone();
        let outcome = next.advance(&event)?;
        live.log.append(&event, &outcome)?;
        live.session = next;
        Ok((outcome, client_view(&id, &live.session)))
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResetRequest {
    pub start: Cell,
}

async fn demo_reset(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<ResetRequest>, JsonRejection>,
) -> ApiResult<serde_json::Value> {
    let Json(req) = body?;
    let (outcome, view) = apply(&state, &id, |_| Event::DemoReset { start: req.start }).await?;
    Ok(Json(json!({ "outcome": outcome, "view": view })))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRequest {
    pub action: Action,
}

async fn demo_step(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<StepRequest>, JsonRejection>,
) -> ApiResult<serde_json::Value> {
    let Json(req) = body?;
    let (outcome, view) = apply(&state, &id, |_| Event::DemoStep { action: req.action }).await?;
    Ok(Json(json!({ "outcome": outcome, "view": view })))
}

async fn set_complete(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<serde_json::Value> {
    let (outcome, view) = apply(&state, &id, |_| Event::SetComplete).await?;
    Ok(Json(json!({ "outcome": outcome, "view": view })))
}

async fn explanation_ack(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<serde_json::Value> {
    let (outcome, view) = apply(&state, &id, |_| Event::ExplanationAck).await?;
    Ok(Json(json!({ "outcome": outcome, "view": view })))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionRequest {
    pub kind: PredictionKind,
    pub probe_index: usize,
    /// An action name for action probes, a goal label for goal probes.
    pub predicted: String,
    pub certainty: u8,
    /// Client-measured seconds; clamped to the session's lifetime.
    pub elapsed: f64,
}

fn parse_prediction(kind: PredictionKind, text: &str) -> Result<Prediction, ApiError> {
    let quoted = serde_json::Value::String(text.to_string());
    let parsed = match kind {
        PredictionKind::Action => serde_json::from_value::<Action>(quoted).map(Prediction::Action),
        PredictionKind::Goal => serde_json::from_value::<GoalLabel>(quoted).map(Prediction::Goal),
    };
    parsed.map_err(|_| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            format!("`{text}` is not a {kind:?} prediction"),
        )
    })
}

async fn prediction(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<PredictionRequest>, JsonRejection>,
) -> ApiResult<serde_json::Value> {
    let Json(req) = body?;
    let predicted = parse_prediction(req.kind, &req.predicted)?;
    if !req.elapsed.is_finite() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "elapsed must be a finite number",
        ));
    }
    let (outcome, view) = apply(&state, &id, |live| Event::PredictionSubmitted {
        probe_index: req.probe_index,
        predicted,
        certainty: req.certainty,
        elapsed: req
            .elapsed
            .clamp(0.0, (now_seconds() - live.created_at).max(0.0)),
    })
    .await?;
    Ok(Json(json!({ "outcome": outcome, "view": view })))
}

async fn survey(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<SurveyResponse>, JsonRejection>,
) -> ApiResult<serde_json::Value> {
    let Json(survey) = body?;
    let (outcome, view) = apply(&state, &id, |_| Event::SurveySubmitted { survey }).await?;
    Ok(Json(json!({ "outcome": outcome, "view": view })))
}

async fn report(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<lfd_feedback::metrics::MetricsReport> {
    let live = state.live(&id).await?;
    let live = live.lock().await;
    Ok(Json(compute_report(
        &live.session,
        &live.session.setup().session,
    )?))
}

async fn log(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let live = state.live(&id).await?;
    let live = live.lock().await;
    let text = std::fs::read_to_string(live.log.path()).map_err(Error::from)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}
