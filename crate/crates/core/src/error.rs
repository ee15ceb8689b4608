use thiserror::Error;

#[derive(Debug, Error)]
pub enum WandError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("obj parse error on line {line}: {msg}")]
    ObjParse { line: usize, msg: String },
    #[error("non-triangular face {face} ({arity} vertices)")]
    NonTriangular { face: usize, arity: usize },
    #[error("face {face} references invalid or repeated vertex indices")]
    BadFaceIndices { face: usize },
    #[error("degenerate face {face} (zero area)")]
    DegenerateFace { face: usize },
    #[error("non-manifold edge ({0}, {1})")]
    NonManifoldEdge(usize, usize),
    #[error("inconsistently oriented edge ({0}, {1})")]
    InconsistentOrientation(usize, usize),
    #[error("empty mesh")]
    EmptyMesh,
    #[error("face index {0} out of range")]
    InvalidFace(usize),
    #[error("vertex index {0} out of range or not in domain")]
    InvalidVertex(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("patch is not disk topology ({loops} boundary loops, euler characteristic {euler}); run cut_to_disk first")]
    NotDisk { loops: usize, euler: i64 },
    #[error("empty soft segmentation: all weights are zero")]
    EmptySoftSegmentation,
    #[error("linear solve failed: {0}")]
    Solver(String),
    #[error("topology error: {0}")]
    Topology(String),
}

pub type Result<T, E = WandError> = std::result::Result<T, E>;
