use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("invalid topology model: {0}")]
    Topology(String),

    #[error("invalid sensing model: {0}")]
    Model(String),

    /// Shapes of states, observations, or parameters do not line up.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("Σ₁ is not Hurwitz (max real eigenvalue {max_real:.3e}); need a > {bound:.6} = N/(2 λ_min(KG))")]
    Stability { max_real: f64, bound: f64 },

    #[error("Grammian is singular (smallest singular value {0:.3e}); parameter is not globally observable")]
    Observability(f64),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no swept consensus/innovation ratio gives a positive definite quadratic form")]
    NoPositiveRatio,

    #[error("parameter validation failed:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<crate::estimators::Violation>),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
