use thiserror::Error;

/// Errors raised by the numerical kernels and the experiment drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max |A - A^dagger| = {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("trace is {trace_re} + {trace_im}i, expected 1")]
    TraceNotOne { trace_re: f64, trace_im: f64 },

    #[error("negative eigenvalue {min_eigenvalue:e}")]
    NegativeEigenvalue { min_eigenvalue: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid basis label {0} (expected 1 or 2)")]
    InvalidLabel(u8),

    #[error("potential is not swap-symmetric (max |SVS - V| = {asymmetry:e})")]
    NotSwapSymmetric { asymmetry: f64 },

    #[error("POVM element outside [0, I]: {0}")]
    InvalidPovm(String),

    #[error("resource cap exceeded: {what} = {requested} > {cap}")]
    CapExceeded {
        what: &'static str,
        requested: usize,
        cap: usize,
    },

    #[error("state left the valid set at integration step {step}: {reason}")]
    IntegrationValidity { step: usize, reason: String },

    #[error("minimizer did not converge: stationarity residual {residual:e}")]
    NonConvergence { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
