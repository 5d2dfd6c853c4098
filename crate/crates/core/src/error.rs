use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration invariant does not hold.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Explicit Euler on the rotation noise is only conditionally stable.
    #[error(
        "stability guard: 2*lambda^2*D*dt = {value:.4} exceeds {limit}; reduce dt below {max_dt:.3e} ns"
    )]
    StabilityGuard { value: f64, limit: f64, max_dt: f64 },

    #[error("invalid Bloch state: {0}")]
    InvalidState(String),

    /// The Bloch vector left the hard norm bound; the step size is too large.
    #[error("numeric overflow at t = {time} ns (|s| = {norm:.3e}); reduce dt")]
    NumericOverflow { time: f64, norm: f64 },

    #[error("series too short for a spectrum: {len} samples")]
    SeriesTooShort { len: usize },

    #[error("trajectory time grids do not match")]
    GridMismatch,

    #[error("band [{lo}, {hi}] holds {bins} bins, need at least 5")]
    BandTooNarrow { lo: f64, hi: f64, bins: usize },

    #[error("no local maximum in band [{lo}, {hi}]: the band edge is the largest bin")]
    NoLocalMaximum { lo: f64, hi: f64 },

    /// Realization `index` of an ensemble failed.
    #[error("realization {index}: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown preset '{0}' (expected fig1a, fig1b, fig2a or fig2b)")]
    UnknownPreset(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True when the root cause is a diverging trajectory.
    pub fn is_numeric(&self) -> bool {
        match self {
            Error::NumericOverflow { .. } => true,
            Error::Realization { source, .. } => source.is_numeric(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
