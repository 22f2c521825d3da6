use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("generators do not span R^{0}")]
    NotSpanning(usize),

    #[error("cone is not pointed")]
    NotPointed,

    #[error("{0} is not in the cone")]
    NotInCone(String),

    #[error("sample too small: {0}")]
    EmptySample(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("GUARD_VIOLATION: {0}")]
    GuardViolation(String),

    #[error("operation needs codimension 1, model has codimension {0}")]
    Codimension(usize),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("{0} is not in L(H)")]
    NotInLH(String),

    #[error("coherence violated: residual {0:e}")]
    Coherence(f64),

    #[error("cocycle consistency violated: residual {0:e}")]
    Consistency(f64),

    #[error("translation difference norm {norm:e} exceeds bound {bound:e}")]
    Divergent { norm: f64, bound: f64 },

    #[error("grade mismatch")]
    GradeMismatch,

    #[error("operator is not unitary on the grid: distortion {0:e}")]
    NotUnitary(f64),

    #[error("kernel is not positive semidefinite: min eigenvalue {0:e}")]
    NotPsd(f64),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
