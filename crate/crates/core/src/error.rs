use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),
    #[error("oscillatory quadrature failed its self-consistency check: {0}")]
    OscillatoryQuadratureFailure(String),
    #[error("potential is not absolutely integrable: {0}")]
    NotAbsolutelyIntegrable(String),
    #[error("potential is not square integrable: {0}")]
    NotSquareIntegrable(String),
    #[error("no finite cube captures the requested mass (searched up to {0})")]
    MassEscapes(f64),
    #[error("dimension {0} unsupported for this operation")]
    DimensionUnsupported(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("criterion precondition not met: {0}")]
    PreconditionFailed(String),
    #[error("witness energy is not negative: {0}")]
    WitnessFailed(f64),
    #[error("tabulated potentials carry no derivative model")]
    NonDifferentiable,
    #[error("optimizer made no progress within budget: {0}")]
    OptimizerStalled(String),
    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
