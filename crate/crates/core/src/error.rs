use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid model parameters or sweep configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The requested computation is outside what a solver supports.
    #[error("capability error: {0}")]
    Capability(String),

    /// Arguments outside an operation's domain (bad site indices etc).
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative solver failed to reach its tolerance.
    #[error("solver error: {message} (residual {residual:.3e})")]
    Solver { message: String, residual: f64 },

    /// A quantity that must be physical (a density matrix, a spectrum) was not.
    #[error("numerical integrity error: {0}")]
    NumericalIntegrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
