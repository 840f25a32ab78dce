use thiserror::Error;

pub type Result<T> = std::result::Result<T, MarketError>;

#[derive(Debug, Error)]
pub enum MarketError {
    /// A value violates a type invariant (negative cost, λ ≤ 0, k* = 0, ...).
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Inputs are well-formed but outside the regime a formula is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("duplicate supplier id `{0}`")]
    DuplicateSupplier(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl MarketError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        MarketError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
