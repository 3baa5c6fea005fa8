use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// Variants are grouped loosely by the module that produces them; the CLI maps
/// configuration problems to exit code 2 and everything numerical to 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    // geometry / Green's functions
    #[error("point {0:?} lies outside the domain")]
    PointOutsideDomain(Vec<f64>),
    #[error("points coincide; the Green's function is singular there")]
    CoincidentPoints,
    #[error("duplicate blow-up points at indices {0} and {1}")]
    DuplicatePoints(usize, usize),
    #[error("matrix is not symmetric (entry ({0},{1}) differs from its transpose)")]
    NonSymmetricInput(usize, usize),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),

    // bubbles
    #[error("kernel index {0} out of range 1..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("radial grid too short: reaches {reached}, needs at least {required}")]
    GridTooShort { reached: f64, required: f64 },
    #[error("shooting diverged: {0}")]
    ShootingDiverged(String),
    #[error("finite-difference step too large: Richardson disagreement {0:.3e}")]
    StepTooLarge(f64),
    #[error("projection radius {radius} exceeds the cutoff bound {bound}")]
    RadiusExceedsCutoff { radius: f64, bound: f64 },
    #[error("cutoff radius {eps} violates the separation bound {bound}")]
    CutoffTooLarge { eps: f64, bound: f64 },

    // params
    #[error("quadrature did not converge (relative change {0:.3e})")]
    QuadratureNotConverged(f64),
    #[error("time must be positive, got {0}")]
    NonpositiveTime(f64),
    #[error("coefficient b_{0} = {1} is not positive")]
    NonpositiveB(usize, f64),
    #[error("interaction matrix is not positive definite (smallest eigenvalue {0:.3e})")]
    MatrixNotPD(f64),
    #[error("Newton iteration diverged: {0}")]
    NewtonDiverged(String),

    // pde solver
    #[error("Newton stalled at t = {t} with dt = {dt} (residual {residual:.3e}); reduce dt")]
    NewtonStalled { t: f64, dt: f64, residual: f64 },
    #[error("negative iterate at node {0}")]
    NegativeIterate(usize),
    #[error("maximum number of steps ({0}) exceeded")]
    MaxStepsExceeded(usize),
    #[error("time {0} outside the admissible range")]
    TimeOutOfRange(f64),
    #[error("ansatz is not radial: {0}")]
    AnsatzNotRadial(String),
    #[error("state has the wrong form: expected {0}")]
    WrongForm(&'static str),

    // asymptotics
    #[error("insufficient samples: {got} available, {required} required")]
    InsufficientSamples { got: usize, required: usize },
    #[error("singular design matrix in least squares fit")]
    SingularDesignMatrix,
    #[error("exponent m = {0} is subcritical; only m >= m_s is supported")]
    SubcriticalUnsupported(f64),
    #[error("non-positive center value {0} at sample {1}")]
    NonpositiveCenterValue(f64, usize),

    // sphere
    #[error("the north pole has no stereographic preimage")]
    NorthPole,

    // io / config
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

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
        Error::Config(e.to_string())
    }
}

impl Error {
    /// True for problems with the inputs rather than the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::Io(_)
                | Error::InvalidDomain(_)
                | Error::DimensionMismatch { .. }
                | Error::Unsupported(_)
                | Error::PointOutsideDomain(_)
                | Error::DuplicatePoints(..)
                | Error::CutoffTooLarge { .. }
                | Error::AnsatzNotRadial(_)
                | Error::WrongForm(_)
                | Error::IndexOutOfRange(..)
                | Error::SubcriticalUnsupported(_)
        )
    }

    /// Variant name, used as the `kind` of JSON error objects.
    pub fn kind(&self) -> String {
        let dbg = format!("{self:?}");
        dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
    }
}
