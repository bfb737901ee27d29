use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric range error: {0}")]
    NumericRange(String),

    /// Cholesky factorization hit a non-positive pivot.
    #[error("factorization failed at pivot {pivot}")]
    Factorization { pivot: usize },

    #[error("score function returned NaN at {point:?}")]
    NanScore { point: Vec<f64> },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(x: &[f64], what: &str) -> Result<()> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{what}: non-finite component {} at index {i}",
            x[i]
        )));
    }
    Ok(())
}
