use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by all solvers in the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    /// The quadrature radicand vanished or went negative inside the interval.
    #[error("turning point: radicand {radicand:e} at s = {s}")]
    TurningPoint { s: f64, radicand: f64 },

    #[error("viscosity singularity: f_A = {value:e} at x3 = {x3} (q = {q}, theta = {theta})")]
    ViscositySingularity { x3: f64, q: f64, theta: f64, value: f64 },

    #[error("boundary closure singularity: f_B(q2, theta2) = {0:e}")]
    BoundaryClosureSingularity(f64),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, history: Vec<f64> },

    #[error("thickness blowdown at t = {time}: min eta {min_eta:e} below floor {floor:e}")]
    ThicknessBlowdown { time: f64, min_eta: f64, floor: f64 },

    #[error("column {index} (x1 = {x1}): {source}")]
    Column {
        index: usize,
        x1: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Coarse category used by the command line runner to pick an exit code.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidParameter(_) | Error::Domain(_) => ErrorCategory::Input,
            Error::NoSolution(_) | Error::InvalidRegime(_) => ErrorCategory::NoSolution,
            Error::Column { source, .. } => source.category(),
            _ => ErrorCategory::Numerical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Input,
    NoSolution,
    Numerical,
}
