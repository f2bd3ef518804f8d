use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the numerical routines.
///
/// Everything except [`Error::Io`] is a refusal: an input violated a
/// precondition of the requested computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("cascade iteration did not converge: {0}")]
    CascadeDiverged(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "grid resolution too coarse on axis {axis}: {per_unit:.3} samples per unit, \
         scale {j_max} needs at least {required}"
    )]
    ResolutionTooCoarse {
        axis: usize,
        per_unit: f64,
        j_max: u32,
        required: f64,
    },

    #[error("need at least {required} scales for a decay fit, got {available}")]
    TooFewScales { required: usize, available: usize },

    #[error("scale {scale} outside the available range 0..={j_max}")]
    ScaleOutOfRange { scale: i64, j_max: u32 },

    #[error("fiber over axis {axis} at value {value:?} has {size} members, bound is {bound}")]
    FiberBoundViolated {
        axis: usize,
        value: Vec<i64>,
        size: usize,
        bound: f64,
    },

    #[error("frequency support of f{function} [{lo}, {hi}] exceeds the multiplier box [{box_lo}, {box_hi}]")]
    FrequencySupportExceeds {
        function: usize,
        lo: f64,
        hi: f64,
        box_lo: f64,
        box_hi: f64,
    },

    #[error("index family references {0} which is absent from the coefficient tensor")]
    MissingIndex(String),

    #[error("grid does not cover the active frequency blocks: {0}")]
    GridTooSmall(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrid(String),

    #[error("multiplier has no closed-form evaluator; {0}")]
    MissingEvaluator(&'static str),

    #[error("exponent q = {q} outside the admissible range {range}")]
    ExponentOutOfRange { q: f64, range: &'static str },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for I/O failures, false for numerical refusals.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
