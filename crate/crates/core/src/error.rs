use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("integration blew up at step {step} (t = {time}): {detail}")]
    IntegrationBlowup { step: u64, time: f64, detail: String },

    #[error("t-SNE optimization produced non-finite coordinates at iteration {iteration}")]
    OptimizationBlowup { iteration: usize },

    #[error("column {column} has zero variance")]
    DegenerateColumn { column: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("row count mismatch: header declares {declared} rows, {written} written")]
    RowCountMismatch { declared: u64, written: u64 },

    #[error("bad trajectory file: {0}")]
    Format(String),

    #[error("checksum mismatch: footer {stored:#018x}, payload {computed:#018x}")]
    Checksum { stored: u64, computed: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    RawIo(#[from] std::io::Error),

    /// Returned by a block visitor to end a pass early.
    #[error("pass stopped early")]
    Stop,

    #[error("csv: {0}")]
    Csv(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
