//! HTTP routes.
//!
//! - `POST /generate` builds an interface from a query log and stores it as a new version
//! - `POST /execute` binds one tree, runs it, and remembers the binding
//! - `POST /export` renders the current query of every tree
//! - `GET /versions`, `GET /versions/{id}` list and fetch versions
//! - `GET /datasets` lists the loaded datasets

use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::Mutex;
use vizgen_core::cost::{CostBreakdown, CostParams};
use vizgen_core::difftree::{Binding, TreeId};
use vizgen_core::mapping::{InterfaceSpec, Size};
use vizgen_core::search::{SearchConfig, SearchError};

use crate::datasets::Datasets;
use crate::error::ApiError;
use crate::pipeline::{self, BindError, Executed, PipelineError};
use crate::store::{InterfaceVersion, VersionStore};

#[derive(Clone)]
pub struct AppState {
    pub datasets: Arc<Datasets>,
    pub store: Arc<RwLock<VersionStore>>,
    pub params: CostParams,
    pub config: SearchConfig,
    /// Held across a whole generation so version ids stay gap-free.
    generating: Arc<Mutex<()>>,
}

impl AppState {
    pub fn new(datasets: Datasets, store: VersionStore) -> Self {
        Self {
            datasets: Arc::new(datasets),
            store: Arc::new(RwLock::new(store)),
            params: CostParams::default(),
            config: SearchConfig::default(),
            generating: Arc::new(Mutex::new(())),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/generate", post(generate))
        .route("/execute", post(execute))
        .route("/export", post(export))
        .route("/versions", get(list_versions))
        .route("/versions/{id}", get(get_version))
        .route("/datasets", get(list_datasets))
        .with_state(state)
}

/// `Json` with rejections reported in the service's error format.
pub struct Body<T>(pub T);

impl<S, T> FromRequest<S> for Body<T>
where
    Json<T>: FromRequest<S, Rejection = JsonRejection>,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(Body(v)),
            Err(e) => Err(ApiError::bad_request(e.body_text())),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
pub struct Screen {
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct GenerateRequest {
    pub queries: Vec<String>,
    pub dataset: String,
    #[serde(default)]
    pub screen: Option<Screen>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub iterations: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct GenerateResponse {
    pub version_id: String,
    pub spec: InterfaceSpec,
    pub cost: CostBreakdown,
}

#[derive(Debug, Deserialize)]
pub struct ExecuteRequest {
    pub version_id: String,
    pub tree_id: TreeId,
    pub bindings: Binding,
}

#[derive(Debug, Deserialize)]
pub struct ExportRequest {
    pub version_id: String,
}

#[derive(Debug, Serialize)]
pub struct ExportResponse {
    pub sql: String,
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::Parse { index, error } => ApiError::parse(*index, error),
            PipelineError::Search(SearchError::Diff(d)) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_query", d.to_string())
            }
            PipelineError::Search(SearchError::EmptyLog) => {
                ApiError::bad_request("no queries given")
            }
            _ => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "generation_failed",
                e.to_string(),
            ),
        }
    }
}

impl From<BindError> for ApiError {
    fn from(e: BindError) -> Self {
        match &e {
            BindError::UnknownTree(t) => {
                ApiError::new(StatusCode::BAD_REQUEST, "unknown_tree", e.to_string())
                    .with_detail(json!({ "tree_id": t }))
            }
            BindError::Diff(d) => ApiError::binding(d),
        }
    }
}

fn storage(e: std::io::Error) -> ApiError {
    ApiError::new(
        StatusCode::INTERNAL_SERVER_ERROR,
        "storage_error",
        e.to_string(),
    )
}

fn poisoned<T>(_: T) -> ApiError {
    ApiError::new(
        StatusCode::INTERNAL_SERVER_ERROR,
        "internal",
        "version store lock poisoned",
    )
}

async fn generate(
    State(s): State<AppState>,
    Body(req): Body<GenerateRequest>,
) -> Result<Json<GenerateResponse>, ApiError> {
    let catalog = s
        .datasets
        .get(&req.dataset)
        .ok_or_else(|| ApiError::unknown_dataset(&req.dataset))?;
    if req.queries.is_empty() {
        return Err(ApiError::bad_request("no queries given"));
    }
    let log = pipeline::parse_queries(&req.queries)?;
    let mut params = s.params.clone();
    if let Some(Screen { w, h }) = req.screen {
        if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
            return Err(ApiError::bad_request("screen dimensions must be positive"));
        }
        params = params.with_screen(Size::new(w, h));
    }
    let mut config = s.config.clone();
    if let Some(seed) = req.seed {
        config.seed = seed;
    }
    if let Some(n) = req.iterations {
        config.iterations = n;
    }

    let _turn = s.generating.lock().await;
    let result =
        tokio::task::spawn_blocking(move || pipeline::generate(&log, &catalog, &params, &config))
            .await
            .map_err(|e| {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            })??;
    let mut store = s.store.write().map_err(poisoned)?;
    let v = store
        .create(&req.dataset, result.spec, result.cost.clone(), req.queries)
        .map_err(storage)?;
    tracing::info!(version = %v.version_id, cost = v.cost.total, "generated interface");
    Ok(Json(GenerateResponse {
        version_id: v.version_id.clone(),
        spec: v.spec.clone(),
        cost: v.cost.clone(),
    }))
}

async fn execute(
    State(s): State<AppState>,
    Body(req): Body<ExecuteRequest>,
) -> Result<Json<Executed>, ApiError> {
    let (spec, dataset) = {
        let store = s.store.read().map_err(poisoned)?;
        let v = store
            .get(&req.version_id)
            .ok_or_else(|| ApiError::unknown_version(&req.version_id))?;
        (v.spec.clone(), v.dataset.clone())
    };
    let catalog = s
        .datasets
        .get(&dataset)
        .ok_or_else(|| ApiError::unknown_dataset(&dataset))?;
    let out = pipeline::execute_tree(&spec, req.tree_id, &req.bindings, &catalog)?;
    s.store
        .write()
        .map_err(poisoned)?
        .set_bindings(&req.version_id, req.tree_id, req.bindings)
        .map_err(storage)?;
    Ok(Json(out))
}

async fn export(
    State(s): State<AppState>,
    Body(req): Body<ExportRequest>,
) -> Result<Json<ExportResponse>, ApiError> {
    let store = s.store.read().map_err(poisoned)?;
    let v = store
        .get(&req.version_id)
        .ok_or_else(|| ApiError::unknown_version(&req.version_id))?;
    let sql = pipeline::export_sql(&v.spec, &v.last_bindings)?;
    Ok(Json(ExportResponse { sql }))
}

async fn list_versions(State(s): State<AppState>) -> Result<Json<Vec<String>>, ApiError> {
    let store = s.store.read().map_err(poisoned)?;
    Ok(Json(store.ids().into_iter().map(String::from).collect()))
}

async fn get_version(
    State(s): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<InterfaceVersion>, ApiError> {
    let store = s.store.read().map_err(poisoned)?;
    store
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::unknown_version(&id))
}

async fn list_datasets(State(s): State<AppState>) -> Json<Vec<String>> {
    Json(s.datasets.names())
}
