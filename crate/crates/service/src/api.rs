//! HTTP+JSON service under `/v1`.
//!
//! | method | path               | body                 | reply                        |
//! |--------|--------------------|----------------------|------------------------------|
//! | POST   | `/v1/meshes`       | OBJ text             | [`MeshInfo`]                 |
//! | GET    | `/v1/meshes/{id}`  |                      | [`MeshGeometry`]             |
//! | POST   | `/v1/select`       | [`SelectRequest`]    | [`SelectResponse`]           |
//! | GET    | `/v1/health`       |                      | `{"status": "ok", ...}`      |
//!
//! Errors reply `{"error": "..."}` with 404 for an unknown mesh, 413 for
//! an oversized upload, 422 for invalid input and 500 for solver failures.

use std::collections::HashMap;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use wand_core::postprocess::FinalizeConfig;
use wand_core::selectors::Selector;
use wand_core::{obj, TriMesh64, WandError};

use crate::pipeline::{finalize_config, is_client_error, resolve_selector, run_select};

pub const MAX_UPLOAD_BYTES: usize = 50 * 1024 * 1024;
pub const MAX_FACES: usize = 200_000;
pub const BIND_ENV: &str = "WAND_ADDR";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

#[derive(Default)]
pub struct AppState {
    meshes: RwLock<HashMap<String, Arc<TriMesh64>>>,
}

impl AppState {
    pub fn mesh(&self, id: &str) -> Option<Arc<TriMesh64>> {
        self.meshes.read().get(id).cloned()
    }

    /// Inserts `mesh` under its content hash, keeping an existing entry.
    pub fn insert(&self, mesh: TriMesh64) -> (String, Arc<TriMesh64>) {
        let id = mesh.content_hash()[..16].to_string();
        let mut map = self.meshes.write();
        let m = map
            .entry(id.clone())
            .or_insert_with(|| Arc::new(mesh))
            .clone();
        (id, m)
    }
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn unprocessable(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message)
    }
}

impl From<WandError> for ApiError {
    fn from(e: WandError) -> Self {
        let status = if is_client_error(&e) {
            StatusCode::UNPROCESSABLE_ENTITY
        } else {
            StatusCode::INTERNAL_SERVER_ERROR
        };
        Self::new(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::unprocessable(e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshInfo {
    pub mesh_id: String,
    pub num_vertices: usize,
    pub num_faces: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshGeometry {
    pub mesh_id: String,
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

fn default_postprocess() -> bool {
    true
}

fn default_lambda() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectRequest {
    pub mesh_id: String,
    pub seed_face: usize,
    pub selector: String,
    /// Per-key overrides of the selector's default configuration.
    #[serde(default)]
    pub config: Option<Value>,
    #[serde(default = "default_postprocess")]
    pub postprocess: bool,
    /// Threshold for the reported `percent_di`.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

/// Parameterized faces: `tris` index into `uv`, `faces[i]` is the mesh
/// face of `tris[i]` and `source_vertex[j]` the mesh vertex of `uv[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UvPayload {
    pub uv: Vec<[f64; 2]>,
    pub tris: Vec<[usize; 3]>,
    pub faces: Vec<usize>,
    pub source_vertex: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub seg_time: f64,
    pub uv_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectResponse {
    pub mesh_id: String,
    pub seed_face: usize,
    pub selector: Selector,
    pub config_hash: String,
    pub finalize: FinalizeConfig,
    /// Raw selector weights, one per mesh face.
    pub weights: Vec<f64>,
    /// Final patch faces, sorted.
    pub faces: Vec<usize>,
    pub uv: UvPayload,
    /// Eval-variant `D_I` per face of `faces`.
    pub per_face_di: Vec<f64>,
    pub lambda: f64,
    pub percent_di: f64,
    pub n_faces: usize,
    pub timing: Timing,
}

async fn health() -> Json<Value> {
    Json(
        json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION"), "selectors": Selector::NAMES }),
    )
}

async fn upload_mesh(
    State(state): State<Arc<AppState>>,
    body: axum::body::Bytes,
) -> ApiResult<MeshInfo> {
    let text = String::from_utf8(body.to_vec())
        .map_err(|_| ApiError::unprocessable("mesh must be UTF-8 OBJ text"))?;
    let mesh = tokio::task::spawn_blocking(move || obj::parse_obj::<f64>(&text))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    if mesh.num_faces() > MAX_FACES {
        return Err(ApiError::unprocessable(format!(
            "mesh has {} faces, limit is {MAX_FACES}",
            mesh.num_faces()
        )));
    }
    let (mesh_id, m) = state.insert(mesh);
    Ok(Json(MeshInfo {
        mesh_id,
        num_vertices: m.num_vertices(),
        num_faces: m.num_faces(),
    }))
}

fn lookup(state: &AppState, id: &str) -> Result<Arc<TriMesh64>, ApiError> {
    state
        .mesh(id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown mesh '{id}'")))
}

async fn get_mesh(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<MeshGeometry> {
    let m = lookup(&state, &id)?;
    Ok(Json(MeshGeometry {
        mesh_id: id,
        vertices: m.vertices.iter().map(|p| [p[0], p[1], p[2]]).collect(),
        faces: m.faces.clone(),
    }))
}

/// Runs one selection request against a cached mesh.
pub fn select_blocking(mesh: &TriMesh64, req: &SelectRequest) -> Result<SelectResponse, ApiError> {
    if req.seed_face >= mesh.num_faces() {
        return Err(ApiError::unprocessable(format!(
            "seed face {} out of range (mesh has {} faces)",
            req.seed_face,
            mesh.num_faces()
        )));
    }
    if !(req.lambda > 0.0) {
        return Err(ApiError::unprocessable("lambda must be positive"));
    }
    let selector =
        resolve_selector(&req.selector, req.config.as_ref()).map_err(ApiError::unprocessable)?;
    let fin = finalize_config(req.postprocess, req.lambda);
    let run = run_select(mesh, req.seed_face, &selector, &fin)?;
    let (uv, report) = (&run.finalized.uv, &run.finalized.report);
    Ok(SelectResponse {
        mesh_id: req.mesh_id.clone(),
        seed_face: req.seed_face,
        config_hash: selector.config_hash(),
        selector,
        finalize: fin,
        faces: run.finalized.patch.faces.clone(),
        uv: UvPayload {
            uv: uv.uv.iter().map(|p| [p[0], p[1]]).collect(),
            tris: uv.tris.clone(),
            faces: uv.faces.clone(),
            source_vertex: uv.source_vertex.clone(),
        },
        per_face_di: report.per_face_di.clone(),
        lambda: report.lambda,
        percent_di: report.percent_di,
        n_faces: report.n_faces,
        timing: Timing {
            seg_time: run.seg_time,
            uv_time: run.uv_time,
        },
        weights: run.weights,
    })
}

async fn select(
    State(state): State<Arc<AppState>>,
    req: Result<Json<SelectRequest>, JsonRejection>,
) -> ApiResult<SelectResponse> {
    let Json(req) = req?;
    let mesh = lookup(&state, &req.mesh_id)?;
    let resp = tokio::task::spawn_blocking(move || select_blocking(&mesh, &req))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(resp))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/meshes", post(upload_mesh))
        .route("/v1/meshes/{id}", get(get_mesh))
        .route("/v1/select", post(select))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

pub fn app() -> Router {
    router(Arc::new(AppState::default()))
}

/// Bind address from `--addr`, else `WAND_ADDR`, else the default.
pub fn bind_address(flag: Option<&str>) -> String {
    flag.map(str::to_string)
        .or_else(|| std::env::var(BIND_ENV).ok().filter(|s| !s.is_empty()))
        .unwrap_or_else(|| DEFAULT_BIND.to_string())
}

pub async fn serve(addr: &str) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app()).await?;
    Ok(())
}
