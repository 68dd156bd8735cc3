use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter {name} = {value} out of range: {reason}")]
    ParameterOutOfRange {
        name: &'static str,
        value: f64,
        reason: String,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("wave speed c = {c} is below the minimal speed {cmin}")]
    SubcriticalSpeed { c: f64, cmin: f64 },

    #[error("{what} did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("iterate left the [lower, upper] envelope at node {node} (xi = {xi}), component {component}, excess {excess:e}")]
    EnvelopeViolation {
        node: usize,
        xi: f64,
        component: char,
        excess: f64,
    },

    #[error("bound verification failed at node {node} (xi = {xi}), component {component}: margin {margin:e}")]
    VerificationFailure {
        node: usize,
        xi: f64,
        component: char,
        margin: f64,
    },

    #[error("no ordering shift r <= {max_shift} found; the domain is too short")]
    NoShiftFound { max_shift: f64 },

    #[error("profile never crosses the level {level}")]
    LevelNotCrossed { level: f64 },

    #[error("decay fit window has {usable} usable nodes, need at least {required}")]
    FitTooNoisy { usable: usize, required: usize },

    #[error("weight window is empty for c = {c} (need c > {cmin})")]
    EmptyWindow { c: f64, cmin: f64 },

    #[error("degenerate essential-spectrum branch: 2*sigma2 = c = {c} gives a vertical line")]
    DegenerateDenominator { c: f64 },

    #[error("eigensolver failed: {0}")]
    EigenConvergence(String),

    #[error("solution blew up at t = {t}: sup norm {sup}")]
    BlowUp { t: f64, sup: f64 },

    #[error("norm at t = {t} is not positive ({value})")]
    NonpositiveNorm { t: f64, value: f64 },

    #[error("front position not found at t = {t}")]
    FrontNotFound { t: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for invalid input, 3 for solver failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ParameterOutOfRange { .. }
            | Error::InvalidGrid(_)
            | Error::SubcriticalSpeed { .. }
            | Error::EmptyWindow { .. }
            | Error::DegenerateDenominator { .. }
            | Error::DimensionMismatch(_)
            | Error::Config(_) => 2,
            Error::NoConvergence { .. }
            | Error::EigenConvergence(_)
            | Error::EnvelopeViolation { .. }
            | Error::VerificationFailure { .. }
            | Error::NoShiftFound { .. } => 3,
            _ => 1,
        }
    }
}
