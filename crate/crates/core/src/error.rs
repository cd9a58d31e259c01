use std::path::PathBuf;

/// Errors raised by the model, solver and file formats.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error("index {index} out of range (must be < {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("all feet airborne: no stance foot to balance forces")]
    AllFeetAirborne,

    #[error("foot {0} is not in stance")]
    SwingFoot(usize),

    #[error("force balance did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64, state: String },

    #[error("gait path is not closed (endpoint gap {gap:e})")]
    OpenPath { gap: f64 },

    #[error("circle of radius {radius} leaves the grid (bound {bound})")]
    OutsideGrid { radius: f64, bound: f64 },

    #[error("trajectory covers {got} samples but one cycle needs {needed}")]
    TrajectoryTooShort { got: usize, needed: usize },

    #[error("no realized bac in the thrust profile")]
    NoBacs,

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("parse error in {context}: {detail}")]
    Parse { context: String, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }

    pub(crate) fn parse(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
