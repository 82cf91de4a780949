use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain where the formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested bound needs constants the chain description does not carry.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("numerical error: {msg} (last bracket [{lo:e}, {hi:e}])")]
    Numerical { msg: String, lo: f64, hi: f64 },

    #[error("trajectory too short: need {needed} states, have {available}")]
    Length { needed: usize, available: usize },

    #[error("path enumeration needs {paths:e} paths, budget is {budget:e}")]
    Size { paths: f64, budget: f64 },

    #[error("L_p norm diverges: p = {p} is not below 1/gamma = {limit}")]
    Divergent { p: f64, limit: f64 },

    /// A chain definition violates one of the stochastic-matrix invariants.
    #[error("invalid chain: {0}")]
    InvalidChain(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
