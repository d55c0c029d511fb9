use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension n = {0} is out of range")]
    DimensionOutOfRange(usize),

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("wrong regime: expected {expected}, found {found}")]
    WrongRegime { expected: String, found: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field escapes the box: outer-shell mass fraction {fraction:.3e} exceeds {tolerance:.3e}")]
    SupportEscape { fraction: f64, tolerance: f64 },

    #[error("field is under-resolved: high-frequency energy fraction {fraction:.3e} exceeds {tolerance:.3e}")]
    Unresolved { fraction: f64, tolerance: f64 },

    #[error("potential is singular at t = {0}")]
    Singularity(f64),

    #[error("slice at t = {t} has norm {norm:.6e} above tau = {tau:.6e}; refine dt")]
    UnsplittableSlice { t: f64, norm: f64, tau: f64 },

    #[error("cannot partition: r = inf and a slice norm {norm:.6e} exceeds tau = {tau:.6e}")]
    CannotPartition { norm: f64, tau: f64 },

    #[error("no contraction after {iterations} iterations (last factor {last_factor:.4})")]
    NonContraction { iterations: usize, last_factor: f64 },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("constraint set is empty: weight has no positive values")]
    EmptyConstraint,

    #[error("iteration did not converge: {0}")]
    Convergence(String),

    #[error("potential norm diverges: {0}")]
    DivergentNorm(String),

    #[error("pair ({p}, {q}) is not admissible in dimension {n}")]
    InadmissiblePair { p: String, q: String, n: usize },

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
