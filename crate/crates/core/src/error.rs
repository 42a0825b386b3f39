use thiserror::Error;

/// Errors raised by the solvers, precoders and experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to parse configuration: {0}")]
    Parse(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("sensor {sensor} has zero effective gain; power equalization is infeasible")]
    InfeasibleEqualization { sensor: usize },

    #[error("sensor {sensor}: beamformed channel cannot support {streams} streams")]
    RankDeficient { sensor: usize, streams: usize },

    #[error("sensor {sensor}: precoder is singular (beamformer orthogonal to channel)")]
    PrecoderSingular { sensor: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("objective undefined at boundary: {0}")]
    Boundary(String),

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("sensor {sensor} exceeds its transmit power budget ({used:.6e} > {budget:.6e})")]
    PowerViolation { sensor: usize, used: f64, budget: f64 },

    #[error("all {samples} randomization candidates were singular; increase the sample count")]
    RandomizationFailure { samples: usize },

    #[error("input outside function domain: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
