//! JSON-over-HTTP wire API.
//!
//! | method | path | body / query | response |
//! |---|---|---|---|
//! | POST | `/campaigns` | campaign config | status |
//! | GET | `/campaigns/{id}` | | status |
//! | GET | `/campaigns/{id}/tasks/next` | `?worker=W` | `{"task": payload or null}` |
//! | POST | `/tasks/{taskId}/submit` | `{"choices": ["left", ...]}` | submission report |
//! | POST | `/campaigns/{id}/advance` | | advance report |
//! | GET | `/campaigns/{id}/results` | | winner sets |
//!
//! Errors are `{"error": message}` with 400 (bad request), 401 (bad token),
//! 403 (excluded worker, or a token for another worker), 404 (unknown id) or
//! 409 (campaign exists; duplicate submission, whose body is the original
//! report).
//!
//! When `<root>/tokens.json` exists it maps bearer tokens to worker ids, and
//! the two worker routes require `Authorization: Bearer <token>`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use log::info;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::campaign::{CampaignConfig, Side, SubmitOutcome, TaskPayload};
use super::store::{CampaignStore, CONFIG_FILE};
use crate::error::{Error, Result};

pub const TOKENS_FILE: &str = "tokens.json";

/// Milliseconds since the Unix epoch.
pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis() as u64)
    })
}

/// Shared server state: a root directory holding one subdirectory per campaign.
pub struct Service {
    root: PathBuf,
    campaigns: Mutex<HashMap<String, Arc<Mutex<CampaignStore>>>>,
    tokens: Option<HashMap<String, String>>,
    clock: Clock,
}

impl Service {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        Self::with_clock(root, system_clock())
    }

    pub fn with_clock(root: impl Into<PathBuf>, clock: Clock) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        let tokens_path = root.join(TOKENS_FILE);
        let tokens = if tokens_path.exists() {
            Some(serde_json::from_slice(&std::fs::read(&tokens_path)?)?)
        } else {
            None
        };
        Ok(Service {
            root,
            campaigns: Mutex::new(HashMap::new()),
            tokens,
            clock,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// The campaign with this id, opened from disk on first use.
    pub fn campaign(&self, id: &str) -> Result<Arc<Mutex<CampaignStore>>> {
        let mut map = self.campaigns.lock().expect("campaign map poisoned");
        if let Some(c) = map.get(id) {
            return Ok(c.clone());
        }
        let dir = self.campaign_dir(id)?;
        if !dir.join(CONFIG_FILE).exists() {
            return Err(Error::NotFound {
                kind: "campaign",
                id: id.to_string(),
            });
        }
        let store = Arc::new(Mutex::new(CampaignStore::open(&dir)?));
        map.insert(id.to_string(), store.clone());
        Ok(store)
    }

    pub fn create(&self, config: CampaignConfig) -> Result<Arc<Mutex<CampaignStore>>> {
        let mut map = self.campaigns.lock().expect("campaign map poisoned");
        let dir = self.campaign_dir(&config.id)?;
        if map.contains_key(&config.id) || dir.join(CONFIG_FILE).exists() {
            return Err(Error::Config(format!(
                "campaign {} already exists",
                config.id
            )));
        }
        let id = config.id.clone();
        let store = Arc::new(Mutex::new(CampaignStore::create(dir, config)?));
        map.insert(id, store.clone());
        Ok(store)
    }

    fn campaign_dir(&self, id: &str) -> Result<PathBuf> {
        let safe = !id.is_empty()
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !safe {
            return Err(Error::NotFound {
                kind: "campaign",
                id: id.to_string(),
            });
        }
        Ok(self.root.join(id))
    }

    fn now(&self) -> u64 {
        (self.clock)()
    }

    /// Worker named by the bearer token, when tokens are configured.
    fn authenticate(&self, headers: &HeaderMap) -> Result<Option<String>, ApiError> {
        let Some(tokens) = &self.tokens else {
            return Ok(None);
        };
        let token = headers
            .get(axum::http::header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .ok_or_else(|| ApiError::status(StatusCode::UNAUTHORIZED, "missing bearer token"))?;
        tokens
            .get(token.trim())
            .cloned()
            .map(Some)
            .ok_or_else(|| ApiError::status(StatusCode::UNAUTHORIZED, "unknown bearer token"))
    }
}

/// Builds the router over a shared service.
pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/campaigns", post(create_campaign))
        .route("/campaigns/{id}", get(campaign_status))
        .route("/campaigns/{id}/tasks/next", get(next_task))
        .route("/campaigns/{id}/advance", post(advance))
        .route("/campaigns/{id}/results", get(results))
        .route("/tasks/{task_id}/submit", post(submit))
        .with_state(service)
}

/// Serves `root` on `listen` until interrupted.
pub async fn serve(root: impl Into<PathBuf>, listen: &str) -> Result<()> {
    let service = Arc::new(Service::new(root)?);
    let addr = if listen.starts_with(':') {
        format!("0.0.0.0{listen}")
    } else {
        listen.to_string()
    };
    let listener = tokio::net::TcpListener::bind(&addr).await?;
    info!(
        "serving {} on {}",
        service.root().display(),
        listener.local_addr()?
    );
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn status(status: StatusCode, msg: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": msg.into() }),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::NotFound { .. } => StatusCode::NOT_FOUND,
            Error::WorkerExcluded { .. } => StatusCode::FORBIDDEN,
            Error::InvalidArgument(_)
            | Error::Rejected(_)
            | Error::EmptyPool(_)
            | Error::Json(_) => StatusCode::BAD_REQUEST,
            Error::Config(_) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": e.to_string() });
        if let Error::WorkerExcluded { reason, .. } = &e {
            body["reason"] = json!(reason);
        }
        ApiError { status, body }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

async fn create_campaign(
    State(svc): State<Arc<Service>>,
    body: axum::body::Bytes,
) -> ApiResult<impl IntoResponse> {
    let config: CampaignConfig = serde_json::from_slice(&body).map_err(Error::from)?;
    if let Err(e @ Error::Config(_)) = config.validate() {
        return Err(ApiError::status(StatusCode::BAD_REQUEST, e.to_string()));
    }
    let store = svc.create(config)?;
    let status = store.lock().expect("campaign poisoned").campaign().status();
    Ok(Json(status))
}

async fn campaign_status(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<impl IntoResponse> {
    let store = svc.campaign(&id)?;
    let status = store.lock().expect("campaign poisoned").campaign().status();
    Ok(Json(status))
}

#[derive(Deserialize)]
struct WorkerQuery {
    worker: Option<String>,
}

#[derive(Serialize)]
struct NextTask {
    task: Option<TaskPayload>,
}

async fn next_task(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<WorkerQuery>,
    headers: HeaderMap,
) -> ApiResult<impl IntoResponse> {
    let authed = svc.authenticate(&headers)?;
    let worker = match (authed, q.worker) {
        (Some(a), Some(w)) if a != w => {
            return Err(ApiError::status(
                StatusCode::FORBIDDEN,
                "token belongs to another worker",
            ))
        }
        (Some(a), _) => a,
        (None, Some(w)) => w,
        (None, None) => {
            return Err(ApiError::status(
                StatusCode::BAD_REQUEST,
                "missing ?worker=",
            ))
        }
    };
    let store = svc.campaign(&id)?;
    let task = store
        .lock()
        .expect("campaign poisoned")
        .next_task(&worker, svc.now())?;
    Ok(Json(NextTask { task }))
}

#[derive(Deserialize)]
struct Submission {
    choices: Vec<Side>,
}

async fn submit(
    State(svc): State<Arc<Service>>,
    UrlPath(task_id): UrlPath<String>,
    headers: HeaderMap,
    body: axum::body::Bytes,
) -> ApiResult<Response> {
    let sub: Submission = serde_json::from_slice(&body).map_err(Error::from)?;
    let authed = svc.authenticate(&headers)?;
    let (campaign_id, _) = task_id.rsplit_once('.').ok_or_else(|| Error::NotFound {
        kind: "task",
        id: task_id.clone(),
    })?;
    let store = svc.campaign(campaign_id)?;
    let mut store = store.lock().expect("campaign poisoned");
    if let Some(worker) = authed {
        let owner = store.campaign().task(&task_id).map(|t| t.worker.clone());
        if owner.is_some_and(|o| o != worker) {
            return Err(ApiError::status(
                StatusCode::FORBIDDEN,
                "task belongs to another worker",
            ));
        }
    }
    Ok(match store.submit(&task_id, &sub.choices, svc.now())? {
        SubmitOutcome::Accepted(r) => Json(r).into_response(),
        SubmitOutcome::Duplicate(r) => (StatusCode::CONFLICT, Json(r)).into_response(),
    })
}

async fn advance(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<impl IntoResponse> {
    let store = svc.campaign(&id)?;
    let report = store
        .lock()
        .expect("campaign poisoned")
        .advance(svc.now())?;
    Ok(Json(report))
}

async fn results(
    State(svc): State<Arc<Service>>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<impl IntoResponse> {
    let store = svc.campaign(&id)?;
    let results = store.lock().expect("campaign poisoned").results();
    Ok(Json(results))
}
