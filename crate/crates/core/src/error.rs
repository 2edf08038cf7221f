use thiserror::Error;

/// Errors raised across the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point ({x}, {y}) lies outside the computational domain")]
    OutsideDomain { x: f64, y: f64 },

    #[error("rational kernel evaluated at coincident points")]
    SingularEvaluation,

    #[error("inner quadrature point coincides with the ball center")]
    SingularConstraint,

    #[error("no inner quadrature points retained in the ball")]
    NoQuadraturePoints,

    #[error("degenerate constraints: all singular values below the rank threshold")]
    DegenerateConstraints,

    #[error("inner point location failed at ({x}, {y}) for outer point ({cx}, {cy})")]
    Location { x: f64, y: f64, cx: f64, cy: f64 },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    /// Tags an error with the pipeline stage that raised it.
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// Process exit code: 2 for configuration problems, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
