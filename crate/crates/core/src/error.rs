//! Error type shared by the solvers, the simulator, and the reporting layer.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver exhausted its iteration budget.
    #[error("solver did not converge: {0}")]
    Convergence(String),

    /// Transient simulation failure, with the time and state at failure.
    #[error("simulation failed at t = {t:.6e} s: {detail}")]
    Simulation { t: f64, detail: String },

    /// Adaptive quadrature could not meet its tolerance within budget.
    #[error("quadrature failed: {0}")]
    Quadrature(String),

    /// Invalid parameter set or run configuration.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Output file or manifest I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
