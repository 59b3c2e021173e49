use num_complex::Complex64;
use thiserror::Error;

/// Errors raised across the library.
///
/// Variants are grouped by how a caller is expected to react: bad input
/// (`InvalidArgument`, `GridMismatch`, `Parse`, `Io`), numerical failure
/// (root finding, factorization, iteration), and admissibility refusal.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("grid touches the vertex r = 0; start the radial grid at an inner cutoff r_min = rho*exp(-T) > 0")]
    VertexOnGrid,

    #[error("derivative order {order} exceeds the supported maximum of 4")]
    DerivativeOrder { order: usize },

    #[error("Newton refinement did not converge from seed {seed} after {iterations} iterations (|f| = {residual:e})")]
    NewtonNonConvergence {
        seed: Complex64,
        iterations: usize,
        residual: f64,
    },

    #[error(
        "argument-principle census mismatch: contour count {contour} but {found} roots located"
    )]
    CensusMismatch { contour: i64, found: usize },

    #[error("argument-principle integral {value} is not close to an integer; refine or move the contour")]
    NonIntegralCount { value: f64 },

    #[error("pencil basis is degenerate at lambda = {lambda} (lambda in {{0, 1, -1}})")]
    DegeneratePencil { lambda: Complex64 },

    #[error("contour passes within {distance:e} of a zero near {near}; perturb the window")]
    ContourTooClose { near: Complex64, distance: f64 },

    #[error("right-hand side has non-finite weighted norm ({norm})")]
    NonFiniteRhs { norm: f64 },

    #[error(
        "(omega, p) = ({omega}, {p}) is not admissible: omega*(3 - 2/p) = {lhs} >= tau = {tau}"
    )]
    Inadmissible {
        omega: f64,
        p: f64,
        lhs: f64,
        tau: f64,
    },

    #[error("singular principal system (pivot {pivot:e} at row {row}); nearest pencil root {nearest_root:?}")]
    Resonance {
        row: usize,
        pivot: f64,
        nearest_root: Option<Complex64>,
    },

    #[error("singular matrix (pivot {pivot:e} at row {row})")]
    Singular { row: usize, pivot: f64 },

    #[error("fixed-point iteration diverges (contraction ratio >= 1 for 3 iterations); reduce rho. ratios: {ratios:?}")]
    Divergence { ratios: Vec<f64> },

    #[error(
        "fixed-point iteration hit max_iter = {max_iter} without converging. ratios: {ratios:?}"
    )]
    IterationLimit { max_iter: usize, ratios: Vec<f64> },

    #[error("problem has {unknowns} unknowns, above the direct-solve cap of {cap}")]
    SizeCap { unknowns: usize, cap: usize },

    #[error("contraction ratio {ratio} >= {threshold} already at the smallest probe rho = {rho}")]
    NumericalRegime {
        rho: f64,
        ratio: f64,
        threshold: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 1 for input/config problems, 2 for numerical
    /// failure, 3 for admissibility refusal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_)
            | Error::GridMismatch(_)
            | Error::VertexOnGrid
            | Error::DerivativeOrder { .. }
            | Error::NonFiniteRhs { .. }
            | Error::SizeCap { .. }
            | Error::DegeneratePencil { .. }
            | Error::Parse(_)
            | Error::Io(_) => 1,
            Error::Inadmissible { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
