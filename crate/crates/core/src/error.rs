use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("axis {axis} {reason}")]
    InvalidGrid { axis: usize, reason: String },

    #[error("allocation of {requested_mb:.1} MB exceeds memory cap of {cap_mb} MB")]
    MemoryCap { requested_mb: f64, cap_mb: u64 },

    #[error("grid too small: product band-limit needs dims >= {required:?}, have {have:?}")]
    BandOverflow { required: [usize; 3], have: [usize; 3] },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("non-finite state at t = {time:e}")]
    BlowUp { time: f64 },

    #[error("quadrature tail {tail:e} exceeds 1% of integral {integral:e}; increase t_max")]
    TailTooLarge { tail: f64, integral: f64 },

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
