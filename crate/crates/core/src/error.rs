use thiserror::Error;

use crate::optimize::SdrSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not symmetric/Hermitian (max deviation {deviation:e}, scale {scale:e})")]
    NotHermitian { deviation: f64, scale: f64 },

    #[error("ill-conditioned or singular matrix: {0}")]
    Conditioning(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("SDR solver stopped after {iterations} iterations with relative gap {gap:e}")]
    SolverNonConvergence {
        iterations: usize,
        gap: f64,
        best: Box<SdrSolution>,
    },

    #[error("objective returned NaN at evaluation {evaluation}")]
    NanObjective { evaluation: usize },

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
