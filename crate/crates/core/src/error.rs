use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid sample path: {0}")]
    InvalidPath(String),
    #[error("degenerate interval [{a}, {b}]")]
    DegenerateInterval { a: f64, b: f64 },
    #[error("grid [{grid_lo}, {grid_hi}] does not match interval [{a}, {b}]")]
    GridMismatch { grid_lo: f64, grid_hi: f64, a: f64, b: f64 },
    #[error("non-positive length {0}")]
    NonPositiveLength(f64),
    #[error("noise field of {cells} cells exceeds cap of {cap}")]
    NoiseTooLarge { cells: u64, cap: u64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite or non-positive value at time {time}, x = {x} (cell {cell}): Z = {value}")]
    NonFinite { time: f64, x: f64, cell: usize, value: f64 },
    #[error("time {0} was not recorded")]
    UnrecordedTime(f64),
    #[error("location {x} outside domain [{lo}, {hi}]")]
    OutsideDomain { x: f64, lo: f64, hi: f64 },
    #[error("integration windows do not overlap")]
    NoOverlap,
    #[error("non-finite integrand at u = {0}")]
    NonFiniteIntegrand(f64),
    #[error("window too narrow: integrand at edge only {gap:.2} log-units below its maximum")]
    WindowTooNarrow { gap: f64 },
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
    #[error("coupling inputs are not ordered: {0}")]
    OrderViolated(String),
    #[error("end time {t} outside time grid [0, {max}]")]
    EndTimeOutside { t: f64, max: f64 },
    #[error("line count {n} too small: {reason}")]
    TooFewLines { n: usize, reason: String },
    #[error("argmax on grid edge at x = {0}; widen the window")]
    ArgmaxOnEdge(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate variance: correlation undefined")]
    DegenerateVariance,
    #[error("non-positive input {0} for power-law fit")]
    NonPositive(f64),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
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

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
