use thiserror::Error;

/// Errors raised by model construction and the numerical engines.
#[derive(Debug, Error)]
pub enum PinningError {
    #[error("invalid excursion law: {0}")]
    InvalidLaw(String),

    #[error("invalid disorder law: {0}")]
    InvalidDisorder(String),

    #[error("moment generating function of the disorder is infinite at beta = {beta}")]
    InfiniteMgf { beta: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PinningError {
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            PinningError::InvalidLaw(_)
                | PinningError::InvalidDisorder(_)
                | PinningError::InfiniteMgf { .. }
                | PinningError::Precondition(_)
                | PinningError::Budget(_)
                | PinningError::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, PinningError>;
