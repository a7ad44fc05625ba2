use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parameter `{field}` out of range: {reason}")]
    Range { field: &'static str, reason: String },

    #[error("subdivision level {0} out of range (0..=8)")]
    SubdivisionLevel(u32),

    #[error("mesh is not watertight: {offending_edges} edge(s) not shared by exactly two faces")]
    NotWatertight { offending_edges: usize },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("degenerate mesh volume {0:e} m^3")]
    DegenerateVolume(f64),

    #[error("rejection sampling exhausted after {0} consecutive rejections")]
    RejectionBudget(u64),

    #[error("non-finite amplitude on path {0}")]
    NonFiniteAmplitude(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("delay grid mismatch: {0}")]
    GridMismatch(String),

    #[error("zero total power")]
    ZeroPower,

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn range(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Range { field, reason: reason.into() }
    }
}
