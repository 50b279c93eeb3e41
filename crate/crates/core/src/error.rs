use thiserror::Error;

/// Errors raised by the simulator, the oracles and the learners.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{qubits} qubits exceeds the simulator cap of {cap}")]
    Resource { qubits: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("duplicate parity label {0}")]
    DuplicateLabel(String),

    #[error("residual norm {alpha_sq:e} is below the degeneracy floor")]
    DegenerateResidual { alpha_sq: f64 },

    #[error("post-selection exceeded the attempt cap of {cap} (success probability {success_prob:e})")]
    PostSelectionFailure { success_prob: f64, cap: u64 },

    #[error("learner threshold collapsed: s* = 2^{log2_s_star:.1} exceeds 2^{n}")]
    ThresholdDegenerate { log2_s_star: f64, n: usize },

    #[error("promise violated: {0}")]
    PromiseViolation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_open(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must lie in (0, 1)")))
    }
}

pub(crate) fn check_unit_half_open(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must lie in (0, 1]")))
    }
}
