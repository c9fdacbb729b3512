use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The eigenvalue residual did not change sign on a bracket. This is a
    /// root-finder bug, never a recoverable condition.
    #[error("bracket failure for mode {mode}: residual has no sign change on [{lo}, {hi}]")]
    BracketFailure { mode: usize, lo: f64, hi: f64 },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("lattice too large for exact enumeration: n = {n} (max {max})")]
    TooLarge { n: usize, max: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_unit_interval(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} = {value} is outside [0, 1]")))
    }
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time {t} must be finite and nonnegative")))
    }
}
