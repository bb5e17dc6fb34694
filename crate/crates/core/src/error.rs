use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid segment {id}: {reason}")]
    InvalidSegment { id: String, reason: String },

    #[error("boundary is not a closed counterclockwise loop: {0}")]
    OpenBoundary(String),

    #[error("invalid singularity at ({x}, {y}): {reason}")]
    InvalidSingularity { x: f64, y: f64, reason: String },

    #[error("arc of radius {radius} around ({x}, {y}) leaves the domain through {segment}")]
    ArcOutsideDomain {
        x: f64,
        y: f64,
        radius: f64,
        segment: String,
    },

    #[error("singular subdomains {first} and {second} overlap")]
    OverlappingSubdomains { first: usize, second: usize },

    #[error("invalid element count: {0}")]
    InvalidCount(String),

    #[error("field and source points coincide")]
    CoincidentPoints,

    #[error("adaptive quadrature did not converge after {levels} subdivision levels")]
    NoConvergence { levels: usize },

    #[error("unsupported boundary condition pair for the singular expansion: {0}")]
    UnsupportedPair(String),

    #[error("gradient of W^{l} requested at the singular origin")]
    EvalAtSingularOrigin { l: usize },

    #[error("point is outside the singular subdomain (r = {r}, R = {radius})")]
    OutsideSubdomain { r: f64, radius: f64 },

    #[error("matrix is singular to working precision (pivot {pivot} at column {column})")]
    SingularMatrix { column: usize, pivot: f64 },

    #[error("system has {equations} equations for {unknowns} unknowns")]
    CountMismatch { equations: usize, unknowns: usize },

    #[error("pure Neumann problem: the potential is only determined up to a constant")]
    PureNeumann,

    #[error("invalid boundary condition: {0}")]
    InvalidBoundaryCondition(String),

    #[error("at least two nodes are needed for trapezoidal integration, got {0}")]
    FewerThanTwoNodes(usize),

    #[error("curve fit needs at least {needed} points, {available} survive the exclusion")]
    InsufficientPoints { needed: usize, available: usize },

    #[error("reference value is zero")]
    ZeroReference,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical machinery (including singular
    /// systems), as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::CoincidentPoints
                | Error::NoConvergence { .. }
                | Error::EvalAtSingularOrigin { .. }
                | Error::SingularMatrix { .. }
                | Error::CountMismatch { .. }
                | Error::InsufficientPoints { .. }
                | Error::PureNeumann
        )
    }
}
