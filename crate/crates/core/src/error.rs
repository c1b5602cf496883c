use thiserror::Error;

use crate::check::Check;

/// Errors raised by the solver and its verification passes.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (relative violation {violation:.3e})")]
    NotHermitian { violation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace is not one (trace {trace:.15})")]
    TraceNotOne { trace: f64 },

    #[error("basis is not orthonormal (Gram defect {defect:.3e})")]
    NotOrthonormal { defect: f64 },

    #[error("Kraus family is not complete (defect {defect:.3e})")]
    Incomplete { defect: f64 },

    #[error("matrix is singular below the positivity floor (min eigenvalue {min_eigenvalue:.3e}, floor {floor:.3e})")]
    SingularBelowFloor { min_eigenvalue: f64, floor: f64 },

    #[error("invalid experiment: {0}")]
    SpecInvalid(String),

    #[error("prior is degenerate: {0}")]
    PriorDegenerate(String),

    #[error("experiment has no split channel")]
    NoSplitChannel,

    #[error("Sinkhorn did not converge after {iterations} sweeps (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("support violation at ({row}, {col}): q > 0 where p = 0")]
    SupportViolation { row: usize, col: usize },

    #[error("consistency check failed: {}", failed_names(.0))]
    ConsistencyViolation(Vec<Check>),

    #[error("forward/reversed equivalence failed: {}", failed_names(.0))]
    EquivalenceViolation(Vec<Check>),

    #[error("pre/post pair ({i}, {j}) is unreachable (normalizer {normalizer:.3e})")]
    ZeroConditional { i: usize, j: usize, normalizer: f64 },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("pre/post overlap {overlap:.3e} is below the guard")]
    ZeroOverlap { overlap: f64 },

    #[error("quadrature normalization defect {defect:.3e} exceeds {tol:.1e}")]
    QuadratureTolExceeded { defect: f64, tol: f64 },

    #[error("marginals are not integral for N = {n}")]
    InfeasibleMarginals { n: u64 },

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn failed_names(checks: &[Check]) -> String {
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| format!("{} ({:.3e} > {:.1e})", c.name, c.residual, c.tolerance))
        .collect();
    failed.join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
