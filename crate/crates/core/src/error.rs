use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("input is not normalized (deficit {deficit:.3e})")]
    NotNormalized { deficit: f64 },

    #[error("integration failed at t = {time_ns:.3} ns: {reason}")]
    Integration { time_ns: f64, reason: String },

    #[error("under-determined fit: rank {rank} < {required} parameters")]
    Underdetermined { rank: usize, required: usize },

    #[error("missing configuration: {0}")]
    MissingConfig(&'static str),

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fit did not converge: {0}")]
    Convergence(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code by category: 2 configuration or input, 3
    /// convergence, 4 invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Underdetermined { .. } | Error::Integration { .. } | Error::Convergence(_) => 3,
            Error::NotHermitian { .. } | Error::NotNormalized { .. } | Error::Invariant(_) => 4,
            _ => 2,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
