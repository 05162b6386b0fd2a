use thiserror::Error;

/// Errors raised by the geometry, group and current layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix: determinant {det} is not 1")]
    InvalidMatrix { det: f64 },
    #[error("element is not hyperbolic (|trace| = {trace})")]
    NotHyperbolic { trace: f64 },
    #[error("generator {label} is not hyperbolic (|trace| = {trace})")]
    NonHyperbolicGenerator { label: String, trace: f64 },
    #[error("relator {relator} evaluates to a matrix at distance {deviation} from the identity")]
    RelatorViolation { relator: String, deviation: f64 },
    #[error("point is not in the upper half-plane")]
    NotInPlane,
    #[error("degenerate segment")]
    DegenerateSegment,
    #[error("geodesic endpoints coincide")]
    DegenerateGeodesic,
    #[error("boundary points coincide")]
    CoincidentPoints,
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("box intervals touch, measure may be infinite")]
    NonCompactBox,
    #[error("unknown generator label {0:?}")]
    UnknownGenerator(String),
    #[error("cannot parse word {0:?}")]
    ParseWord(String),
    #[error("orbit ball exceeds the cap of {cap} elements")]
    BallTooLarge { cap: usize },
    #[error("invalid weight {0}")]
    InvalidWeight(f64),
    #[error("components {0} and {1} are conjugate")]
    DuplicateComponent(String, String),
    #[error("currents live on different presentations")]
    PresentationMismatch,
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("quadruple is not in convex position")]
    NotConvexPosition,
    #[error("nodes {0} and {1} are disconnected")]
    Disconnected(usize, usize),
    #[error("node {0} does not exist")]
    NodeNotFound(usize),
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Variant name, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMatrix { .. } => "InvalidMatrix",
            Error::NotHyperbolic { .. } => "NotHyperbolic",
            Error::NonHyperbolicGenerator { .. } => "NonHyperbolicGenerator",
            Error::RelatorViolation { .. } => "RelatorViolation",
            Error::NotInPlane => "NotInPlane",
            Error::DegenerateSegment => "DegenerateSegment",
            Error::DegenerateGeodesic => "DegenerateGeodesic",
            Error::CoincidentPoints => "CoincidentPoints",
            Error::InvalidBox(_) => "InvalidBox",
            Error::NonCompactBox => "NonCompactBox",
            Error::UnknownGenerator(_) => "UnknownGenerator",
            Error::ParseWord(_) => "ParseWord",
            Error::BallTooLarge { .. } => "BallTooLarge",
            Error::InvalidWeight(_) => "InvalidWeight",
            Error::DuplicateComponent(..) => "DuplicateComponent",
            Error::PresentationMismatch => "PresentationMismatch",
            Error::Unsupported(_) => "Unsupported",
            Error::NotConvexPosition => "NotConvexPosition",
            Error::Disconnected(..) => "Disconnected",
            Error::NodeNotFound(_) => "NodeNotFound",
            Error::FileNotFound(_) => "FileNotFound",
            Error::Config(_) => "Config",
            Error::Io(_) => "Io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
