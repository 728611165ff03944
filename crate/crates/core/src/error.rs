use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("singular evaluation at x = {x}: {what}")]
    SingularEvaluation { x: f64, what: &'static str },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("numerical overflow at t = {t}")]
    NumericalOverflow { t: f64 },

    #[error("boundary contamination at t = {t}: tail mass fraction {fraction:e} exceeds {threshold:e}")]
    BoundaryContamination { t: f64, fraction: f64, threshold: f64 },

    #[error("symmetry precondition violated: relative even part {even_part:e} exceeds tolerance")]
    SymmetryPrecondition { even_part: f64 },

    #[error("degenerate interval [{a}, {b}]: no grid nodes inside")]
    DegenerateInterval { a: f64, b: f64 },

    #[error("query error: {0}")]
    Query(String),

    #[error("bisection did not converge for eigenvalue {index}: bracket [{lo:e}, {hi:e}]")]
    Bisection { index: usize, lo: f64, hi: f64 },

    #[error("parse error at `{key}`: {message}")]
    Parse { key: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
