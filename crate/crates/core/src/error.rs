use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field is in {found} space, expected {expected}")]
    SpaceMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("poisson right-hand side has mean mode {0:e}; zero-mean gauge required")]
    Gauge(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state invariant violated: {0}")]
    Invariant(String),

    #[error("time step {dt:e} exceeds CFL bound {bound:e}")]
    Cfl { dt: f64, bound: f64 },

    #[error("non-finite values at t = {t}: {what}")]
    BlowUp { t: f64, what: String },

    #[error("misaligned trajectories: {0}")]
    Misaligned(String),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("config: {0}")]
    Config(String),

    #[error("rate fit: {0}")]
    Fit(String),

    #[error("render: {0}")]
    Render(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
