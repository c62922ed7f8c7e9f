use thiserror::Error;

/// Errors raised by every module of the crate.
///
/// Each variant maps onto a stable machine-readable code (see [`Error::code`])
/// that the command-line front end reports on failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("no norming functional: zero vector")]
    ZeroVector,

    #[error("not a metric: triangle inequality fails for ({i}, {j}, {k}): d(i,k) = {direct} > d(i,j) + d(j,k) = {via}")]
    NotMetric {
        i: String,
        j: String,
        k: String,
        direct: f64,
        via: f64,
    },

    #[error("not injective on X: pair ({0}, {1}) collapses")]
    NotInjective(String, String),

    #[error("separation check failed: {0}")]
    Separation(String),

    #[error("Auerbach extension failed: dual norm {0}")]
    AuerbachExtension(f64),

    #[error("approximation infeasible: {0}")]
    Infeasible(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse(_) => "input-parse",
            Error::InvalidInput(_) | Error::NotMetric { .. } => "invalid-input",
            Error::Precondition(_) | Error::DimensionMismatch { .. } => "precondition",
            Error::Budget(_) | Error::Infeasible(_) => "budget",
            Error::ZeroVector | Error::NotInjective(..) => "degenerate",
            Error::Separation(_) | Error::AuerbachExtension(_) | Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "input-parse" => 2,
            "invalid-input" => 3,
            "precondition" => 4,
            "budget" => 5,
            "degenerate" => 6,
            "numerical" => 7,
            _ => 8,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
