use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnyonError {
    #[error("unknown charge `{0}`")]
    UnknownCharge(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical convergence failure: {0}")]
    Convergence(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("outcome has zero probability (p = {0:e})")]
    ZeroProbability(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("pole in all-order sum: {0}")]
    Pole(String),
    #[error("series did not converge: {0}")]
    NonConvergence(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, AnyonError>;
