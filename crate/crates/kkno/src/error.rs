use thiserror::Error;

/// Errors surfaced by grid, quadrature, kernel, operator, and solver routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature order must be at least 1")]
    ZeroOrder,

    #[error("non-finite value {value} at node {node}")]
    NonFinite { node: String, value: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("matrix is not symmetric: |a[{i}][{j}] - a[{j}][{i}]| = {deviation}")]
    NotSymmetric { i: usize, j: usize, deviation: f64 },

    #[error("matrix is not positive definite: pivot {pivot} failed during factorization")]
    NotPositiveDefinite { pivot: usize },

    #[error("drifted kernels cannot wrap another drifted kernel")]
    NestedDrift,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("test function `{0}` has no Hessian evaluator")]
    MissingHessian(String),

    #[error("no closed-form bound constant for this kernel; supply one explicitly")]
    NoDefaultConstant,

    #[error("incompatible normalization: {0}")]
    IncompatibleNormalization(String),

    #[error("incompatible schedule: {0}")]
    IncompatibleSchedule(String),

    #[error("time step {dt} exceeds the stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
