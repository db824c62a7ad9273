use thiserror::Error;

pub type Result<T> = std::result::Result<T, CtError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CtError {
    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),

    #[error("parameter `{name}` = {value} is outside its domain ({reason})")]
    ParamDomain {
        name: String,
        value: f64,
        reason: &'static str,
    },

    #[error("missing parameter `{0}`")]
    MissingParam(String),

    #[error("invalid CT parameters (λ1 = {lambda1}, λ2 = {lambda2}): density is negative at u = {u}")]
    InvalidParams { lambda1: f64, lambda2: f64, u: f64 },

    #[error("argument {0} is outside the open unit interval")]
    UnitDomain(f64),

    #[error("sample size must be at least one")]
    EmptySample,

    #[error("mixing probabilities ({0}, {1}, {2}) must be in [0, 1] and sum to 1")]
    Mixing(f64, f64, f64),

    #[error("degenerate parameters: {0}")]
    Degenerate(&'static str),

    #[error("{0} has an infinite mean")]
    InfiniteMean(String),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("maximum-likelihood fit failed: {0}")]
    FitFailed(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CtError {
    fn from(e: std::io::Error) -> Self {
        CtError::Io(e.to_string())
    }
}
