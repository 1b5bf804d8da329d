use thiserror::Error;

/// Errors produced by the estimation and inference routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("response {y} outside the domain of the {loss} loss")]
    Domain { loss: &'static str, y: f64 },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("quotient distance {distance} is not below the injectivity radius {radius}")]
    OutOfInjectivity { distance: f64, radius: f64 },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("capability limit: {0}")]
    Capability(String),

    #[error("optimizer diverged after {iterations} iterations (last finite loss {last_loss})")]
    Divergence {
        iterations: usize,
        last_loss: f64,
        trace: Vec<f64>,
    },

    #[error("spectral initialization failed: {0}")]
    Initialization(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("numerical abort: {0}")]
    Aborted(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Degenerate(_)
                | Error::OutOfInjectivity { .. }
                | Error::Divergence { .. }
                | Error::Initialization(_)
                | Error::Aborted(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
