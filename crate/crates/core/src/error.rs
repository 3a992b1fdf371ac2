use thiserror::Error;

/// Errors produced anywhere in the positioning pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("angle {angle_deg}° is outside the pattern support")]
    OutOfSupport { angle_deg: f64 },

    #[error("tabulated gain at {angle_deg}° is not positive ({gain})")]
    NonPositiveGain { angle_deg: f64, gain: f64 },

    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid polyline: {0}")]
    InvalidPolyline(String),

    #[error("objective is not finite at ({d}, {theta})")]
    NonFiniteObjective { d: f64, theta: f64 },

    #[error("objective is infeasible at every evaluated point")]
    Infeasible,

    #[error("polylines span disjoint angle intervals")]
    NoOverlap,

    #[error("polylines coincide over an interval; intersection set is infinite")]
    DegenerateOverlap,

    #[error("{0}: angle is unobservable")]
    Degenerate(&'static str),

    #[error("need at least {needed} measurements, got {got}")]
    Underdetermined { needed: usize, got: usize },

    #[error("no pair of target curves intersects inside the search range")]
    NoIntersections,

    #[error("measurement set has no zero-rotation reference sample")]
    MissingReference,

    #[error("target is collinear with the baseline (|sin(θ1-θ0)| = {sin_gap:e})")]
    DegenerateBaseline { sin_gap: f64 },

    #[error("shadowing sigma is zero; Fisher information is unbounded")]
    ZeroNoise,

    #[error("Fisher information matrix is singular (N·ΣK² - (ΣK)² = {gap:e})")]
    SingularFim { gap: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("too many failed trials at axis value {axis_value}: {failures}/{trials}")]
    TooManyFailures {
        axis_value: f64,
        failures: usize,
        trials: usize,
    },

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

pub type Result<T, E = Error> = std::result::Result<T, E>;
