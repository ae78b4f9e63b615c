use thiserror::Error;

/// Errors raised by the planning toolkit.
#[derive(Debug, Error)]
pub enum LippError {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("ill-conditioned covariance system ({size}x{size}): min pivot {min_pivot:e}, max pivot {max_pivot:e}")]
    Numerical {
        size: usize,
        min_pivot: f64,
        max_pivot: f64,
    },

    #[error("scenario generation failed: {0}")]
    Scenario(String),

    #[error("infeasible plan: {0}")]
    InfeasiblePlan(String),

    #[error("unsupported schema version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("model parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LippError>;

pub(crate) fn input_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(LippError::Input(msg.into()))
}
