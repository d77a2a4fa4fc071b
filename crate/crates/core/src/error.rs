use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("a multiplet needs at least 3 orbifold points, got {0}")]
    TooFewPoints(usize),
    #[error("orbifold orders must be at least 2, got {0}")]
    OrderTooSmall(u32),
    #[error("orbifold orders must be sorted non-decreasingly, got {0:?}")]
    Unsorted(Vec<u32>),
    #[error("cannot parse {0:?}")]
    Parse(String),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeriesError {
    #[error("key {key} has weighted degree {degree}, expected 2")]
    NotQuasiHomogeneous { key: String, degree: String },
    #[error("key does not match the geometry: {0}")]
    Shape(String),
    #[error("m=0 key {0} mixes sectors and is fixed to zero")]
    SeparationConstraint(String),
}

#[derive(Debug, Error)]
pub enum ReconstructError {
    /// Every candidate equation was evaluable but none involves the target.
    #[error("solver stuck at {target}")]
    SolverStuck { target: String },
    /// A full worklist pass solved nothing.
    #[error("no progress; {} targets pending, first {}", pending.len(), pending.first().map(String::as_str).unwrap_or(""))]
    NoProgress { pending: Vec<String> },
    /// An equation with only known coefficients does not hold.
    #[error("inconsistent seeds: {equation} has residual {residual}")]
    InconsistentSeed { equation: String, residual: String },
    #[error("a rescaling factor must be nonzero")]
    ZeroRescale,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error(
    "unknown seed mode {0:?}; expected standard, vanishing, vanishing-no-vii or rescaled:<p/q>"
)]
pub struct SeedModeError(pub String);

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("sectors {0} and {1} have different orders")]
    OrderMismatch(usize, usize),
    #[error("sector {0} does not exist")]
    NoSuchSector(usize),
}

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}
