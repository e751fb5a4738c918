use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frame is undefined at the origin")]
    Origin,
    #[error("kernel evaluated at coincident points")]
    Coincident,
    #[error("point with |z| = {0} is not strictly inside the unit ball")]
    NotInterior(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown {kind} `{name}`; expected one of: {expected}")]
    Unknown {
        kind: &'static str,
        name: String,
        expected: String,
    },
    #[error("eps-extrapolation did not converge (fitted exponents {exponents:?})")]
    Extrapolation { exponents: Vec<f64> },
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
