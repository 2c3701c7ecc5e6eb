use crate::depletion::Trajectory;

/// Crate-wide error type. Variants map one-to-one onto the process exit
/// classes used by the command-line frontend: configuration (1), numeric
/// failure (2), out-of-band operating point (3).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A parameter value is outside its physical domain (nonpositive
    /// inductance, pump ratio outside (0, 1), zero cell count, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A frequency falls outside the propagating band of the line,
    /// including the guard strip below the plasma cutoff.
    #[error("out of band: {0}")]
    OutOfBand(String),

    /// An algorithm failed to produce a trustworthy result: non-convergent
    /// extrapolation, root not bracketed, unstable lattice state.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A request is structurally inconsistent (mismatched grid sizes,
    /// non-commensurate analysis window, ...).
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    /// The adaptive integrator ran out of its step budget. The partial
    /// trajectory accumulated so far is preserved for diagnosis.
    #[error("numeric failure: step budget of {max_steps} exhausted at x = {x:.6e} m")]
    StepsExhausted {
        max_steps: usize,
        x: f64,
        partial: Box<Trajectory>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
