use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quaternion norm {0:e} is too small to normalize")]
    ZeroNormQuaternion(f64),

    #[error("non-finite input: {0}")]
    NonFiniteInput(&'static str),

    #[error("Cholesky factor is singular (diagonal entry {index} = {value:e})")]
    SingularFactor { index: usize, value: f64 },

    #[error("residual of the SE(3) logarithm is not finite")]
    NonFiniteResidual,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("scene sets differ between methods: {0}")]
    SceneMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    DivergedTraining { epoch: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
