use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the reconstruction library can report.
///
/// Variants fall into two families: input problems (bad files, malformed
/// arguments, inconsistent dimensions) and numerical degeneracies of the
/// geometry itself. [`Error::is_numerical`] tells them apart.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate shape: coordinate spreads sum to {0:e}")]
    DegenerateShape(f64),

    #[error("length mismatch in {what}: {left} vs {right}")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("image has no visible keypoints")]
    NoVisiblePoints,

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("Manhattan axis {axis} projects to a near-zero image displacement")]
    AxisDegenerate { axis: usize },

    #[error(
        "projected Manhattan slopes coincide ({mu:?}); the viewing direction lies in the plane of two axes"
    )]
    SlopeCoincidence { mu: [f64; 3] },

    #[error("camera solve produced a negative squared entry ({value:e}); slopes are inconsistent")]
    NegativeSquare { value: f64 },

    #[error("depth block of the camera is singular (condition number {cond:e})")]
    YZSingular { cond: f64 },

    #[error("symmetry axis is parallel to the viewing direction; mirror offsets are unobservable")]
    SymmetryAxisAlongView,

    #[error("need at least {required} images, got {found}{hint}")]
    TooFewImages {
        found: usize,
        required: usize,
        hint: &'static str,
    },

    #[error("scale ambiguity has non-positive square ({lambda_sq:e}); the shape has no extent across the symmetry plane")]
    DegenerateScale { lambda_sq: f64 },

    #[error("ambiguity system is ill-conditioned (condition number {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("ambiguity transform is not invertible")]
    SingularAmbiguity,

    #[error("structure normal matrix is singular; all cameras see the symmetry plane edge-on")]
    SingularNormalMatrix,

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error in {source_name} at line {line}, column {column}, field `{path}`: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        path: String,
        message: String,
    },

    #[error("unsupported schema version {found} (supported: {supported})")]
    SchemaVersionUnsupported { found: u32, supported: u32 },

    #[error("groundtruth shape breaks mirror symmetry for pair `{left}`/`{right}` (deviation {deviation:e})")]
    MirrorViolation {
        left: String,
        right: String,
        deviation: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for degeneracies of the geometry, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateShape(_)
                | Error::RankDeficient(_)
                | Error::AxisDegenerate { .. }
                | Error::SlopeCoincidence { .. }
                | Error::NegativeSquare { .. }
                | Error::YZSingular { .. }
                | Error::SymmetryAxisAlongView
                | Error::DegenerateScale { .. }
                | Error::IllConditioned { .. }
                | Error::SingularAmbiguity
                | Error::SingularNormalMatrix
        )
    }
}
