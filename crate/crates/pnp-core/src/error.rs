//! Error type shared by every solver module.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid extent: x_right ({x_right}) must be greater than x_left ({x_left})")]
    InvalidExtent { x_left: f64, x_right: f64 },

    #[error("too few cells: got {n_cells}, need at least 2")]
    TooFewCells { n_cells: usize },

    #[error("field has {len} values but the mesh has {expected} nodes")]
    LengthMismatch { len: usize, expected: usize },

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("fields live on different meshes")]
    MeshMismatch,

    #[error("inconsistent tridiagonal dimensions: lower {lower}, diag {diag}, upper {upper}, rhs {rhs}")]
    BadDimensions {
        lower: usize,
        diag: usize,
        upper: usize,
        rhs: usize,
    },

    #[error("singular pivot {value:e} at row {row} during tridiagonal elimination")]
    SingularPivot { row: usize, value: f64 },

    #[error("negative concentration {value:e} at node {index} (below round-off tolerance)")]
    NegativeConcentration { index: usize, value: f64 },

    #[error("negative diffusion coefficient {value:e} at node {index}")]
    NegativeCoefficient { index: usize, value: f64 },

    #[error("invalid parameter '{name}': {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("sub-iteration diverged: increment {increment:e} after {iters} iterations (tolerance {tol:e})")]
    SubIterationDiverged {
        iters: usize,
        increment: f64,
        tol: f64,
    },

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config validation error for '{field}': {reason}")]
    ConfigValidation { field: String, reason: String },

    #[error("expression error at position {position}: {message}")]
    ExprParse { position: usize, message: String },

    #[error("unknown preset '{0}'")]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
