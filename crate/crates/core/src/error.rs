use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    #[error("config line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error(
        "Matsubara closure residue {residue:.3e} exceeds 10% of the Drude amplitude {drude:.3e}; \
         raise n_matsubara"
    )]
    InsufficientMatsubara { residue: f64, drude: f64 },

    #[error("hierarchy has {count} auxiliary operators, budget is {budget}")]
    HierarchyTooLarge { count: usize, budget: usize },

    #[error("non-finite auxiliary operator at tier {tier} (index {index}) at t = {time}")]
    NonFinite { tier: usize, index: usize, time: f64 },

    #[error("propagation of initial operator sigma_{mu} failed: {source}")]
    Propagation {
        mu: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("time {time} is not on the trajectory grid")]
    OffGrid { time: f64 },

    #[error("dynamical map not invertible at t = {time} (condition number {condition:.3e})")]
    NotInvertible { time: f64, condition: f64 },

    #[error("decoherence matrix anti-Hermitian residual {residual:.3e} at t = {time}")]
    NotHermitian { time: f64, residual: f64 },

    #[error("Volterra diagonal solve ill-conditioned at lag {lag} (condition {condition:.3e})")]
    IllConditioned { lag: f64, condition: f64 },

    #[error(
        "memory kernel has not decayed: tail norm {tail:.3e} vs peak {peak:.3e}; \
         extend the lag grid by about {extension:.2}"
    )]
    KernelNotDecayed { tail: f64, peak: f64, extension: f64 },

    #[error("{0}")]
    Unsupported(String),

    #[error("trajectory too short: {0}")]
    TooShort(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { key: key.to_string(), reason: reason.into() }
    }

    /// True for errors caused by user configuration rather than numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Parse { .. }
                | Error::Csv { .. }
                | Error::HierarchyTooLarge { .. }
                | Error::Unsupported(_)
                | Error::OffGrid { .. }
        )
    }
}
