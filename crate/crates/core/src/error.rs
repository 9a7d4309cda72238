use thiserror::Error;

/// Errors produced by the solver toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid architecture: {0}")]
    InvalidSpec(String),

    #[error("unknown {kind} token `{token}`")]
    UnknownToken { kind: &'static str, token: String },

    #[error("invalid quadrature request: {0}")]
    Quadrature(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("basis evaluated at a kink of the regularity factor: {0:?}")]
    NonDifferentiable(Vec<f64>),

    #[error("least-squares system is singular even after ridge regularization")]
    Singular,

    #[error("solve failed at parameter {param:?}: {source}")]
    AtParameter {
        param: Vec<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error("problem `{problem}` does not support {what}")]
    Unsupported { problem: String, what: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite gradient at step {step} (coordinate {index})")]
    NonFiniteGradient { step: u64, index: usize },

    #[error("invalid parameter point {param:?}: {reason}")]
    InvalidParameter { param: Vec<f64>, reason: String },

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite(_) | Error::Singular | Error::NonFiniteGradient { .. } => true,
            Error::AtParameter { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
