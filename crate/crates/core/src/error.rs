use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("coefficient `{0}` must be strictly positive")]
    NonPositiveCoefficient(&'static str),
    #[error("exponent or constant `{0}` must be non-negative")]
    NegativeExponent(&'static str),
    #[error("coefficient `{0}` is not finite")]
    NonFiniteCoefficient(&'static str),
    #[error("reaction rates are not finite at (u, v, w) = ({u:e}, {v:e}, {w:e})")]
    NonFiniteRate { u: f64, v: f64, w: f64 },
    #[error("invalid exponent triple: {0}")]
    InvalidTriple(String),
    #[error("no admissible gamma found after {0} halvings")]
    IterationLimit(usize),
    #[error("exponent condition is infeasible: {0}")]
    InfeasibleBranch(String),
    #[error("admissible interval for epsilon is empty or degenerate (gap = {0:e})")]
    DegenerateEpsilon(f64),
    #[error("decay rate mu must be positive, got {0:e}")]
    NonPositiveMu(f64),
    #[error("constant `{0}` is not finite")]
    NonFiniteConstant(&'static str),
    #[error("initial data must be strictly positive (minimum of {component} is {value:e})")]
    NonPositiveInitialData { component: &'static str, value: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid scheme configuration: {0}")]
    InvalidScheme(String),
    #[error("{component} lost positivity at cell {cell} (value {value:e}); try a smaller dt")]
    PositivityLoss {
        component: &'static str,
        cell: usize,
        value: f64,
    },
    #[error("linear solver failed: {0}")]
    SolverFailure(String),
    #[error("non-finite value in {0}")]
    NonFiniteValue(&'static str),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("snapshot format: {0}")]
    Snapshot(String),
    #[error("certificate format: {0}")]
    CertificateFormat(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
