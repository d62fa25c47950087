use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain is not connected")]
    DisconnectedDomain,
    #[error("regions overlap: {0}")]
    OverlappingRegions(String),
    #[error("flux compatibility violated, residual {0:e}")]
    FluxIncompatible(f64),
    #[error("malformed domain: {0}")]
    MalformedDomain(String),
    #[error("geometry is not commensurate with cell size {0}")]
    NonCommensurateGrid(f64),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("outlet width must be positive, got {0}")]
    NonpositiveWidth(f64),
    #[error("grid does not match: {0}")]
    GridMismatch(String),
    #[error("cut-off parameter must lie in (0, 1], got {0}")]
    BadEpsilon(f64),
    #[error("singular linear system")]
    SingularSystem,
    #[error("boundary flux does not balance, net {0:e}")]
    IncompatibleBoundaryFlux(f64),
    #[error("stream constant mismatch on outlet {outlet}: {value:e}")]
    StreamMismatch { outlet: usize, value: f64 },
    #[error("flux around obstacle {obstacle} does not match its wall data: {value:e}")]
    ObstacleFluxMismatch { obstacle: usize, value: f64 },
    #[error("no convergence after {iterations} iterations, best residual {best_residual:e}")]
    NonConvergence { iterations: usize, best_residual: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("cannot normalize, J = {0:e}")]
    DegenerateNormalization(f64),
    #[error("need at least 16 samples, got {0}")]
    GridTooCoarse(usize),
    #[error("truncation {0} is shorter than 12")]
    TruncationTooShort(f64),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("parse error at line {line}, key `{key}`: {message}")]
    ParseError { line: usize, key: String, message: String },
    #[error("invalid value for `{key}`: {reason}")]
    ValidationError { key: String, reason: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
