use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors reported by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation (non-positive frequency, negative
    /// temperature, bad phase, ...).
    #[error("invalid parameter `{name}`: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// Operator or state dimensions do not match.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A state failed validation (non-unit polarization, non-Hermitian or
    /// non-unit-trace density matrix, ...).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// The friction convolution needs at least two recorded expectation
    /// values to form a derivative.
    #[error("friction history holds {0} entries; at least 2 are required")]
    InsufficientHistory(usize),

    /// The requested kernel integral does not converge (e.g. tabulated
    /// J(ω)/ω is non-integrable at ω = 0, or the Planck occupation is
    /// evaluated at ω = 0 with T > 0).
    #[error("divergent integral: {0}")]
    Divergent(String),

    /// A time series is too coarsely sampled for the requested analysis.
    #[error("under-resolved series: {0}")]
    UnderResolved(String),

    /// A least-squares fit could not be carried out on the given data.
    #[error("fit failed: {0}")]
    FitFailed(String),

    /// The integrator produced a non-finite state. Carries the step index,
    /// the time, and the last polarization vector for diagnosis.
    #[error("numerical abort at step {step} (t = {t:.6e} s): P = ({px:.6e}, {py:.6e}, {pz:.6e})")]
    NumericalAbort {
        step: usize,
        t: f64,
        px: f64,
        py: f64,
        pz: f64,
    },

    /// An ensemble member failed; carries the trajectory index so the run
    /// can be reproduced in isolation from (master_seed, trajectory).
    #[error("trajectory {trajectory} failed: {source}")]
    TrajectoryFailed {
        trajectory: usize,
        #[source]
        source: Box<Error>,
    },

    /// A text input (config file, operator file, tabulated CSV) failed to
    /// parse. Line numbers are 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
