//! Numerical thresholds used across the crate.
//!
//! Every check reads its threshold from a [`Tolerances`] value so callers can
//! tighten or loosen individual checks; the defaults are the constants below.

/// Relative Hermiticity defect allowed for a density matrix.
pub const HERMITIAN: f64 = 1e-12;
/// Most negative eigenvalue accepted for a density matrix.
pub const POSITIVITY: f64 = 1e-12;
/// Allowed trace defect for a density matrix.
pub const TRACE: f64 = 1e-12;
/// Gram-matrix defect allowed for an orthonormal basis.
pub const ORTHONORMAL: f64 = 1e-12;
/// Completeness defect allowed for a Kraus family.
pub const COMPLETENESS: f64 = 1e-10;
/// Hermiticity defect accepted by the square-root routines.
pub const SQRT_HERMITIAN: f64 = 1e-10;
/// Eigenvalues below `FLOOR_REL * max eigenvalue` are treated as zero.
pub const FLOOR_REL: f64 = 1e-12;
/// Entries of probability vectors must sum to one within this.
pub const PROBABILITY_SUM: f64 = 1e-12;
/// Schrödinger-system and factorization identities.
pub const SYSTEM: f64 = 1e-10;
/// Channel bridging identities and operator-level equivalences.
pub const BRIDGING: f64 = 1e-9;
/// Product-form identities for intermediate distributions.
pub const PRODUCT: f64 = 1e-12;
/// Normalization of intermediate distributions.
pub const NORMALIZATION: f64 = 1e-10;
/// Quadrature normalization of continuous outcome families.
pub const QUADRATURE: f64 = 1e-6;
/// Forward vs reversed trace forms for generalized measurements.
pub const GENERALIZED_REVERSAL: f64 = 1e-8;
/// Agreement of forward, reversed and disintegrated weak values.
pub const WEAK_AGREEMENT: f64 = 1e-9;
/// Denominator guard for weak values.
pub const OVERLAP_GUARD: f64 = 1e-12;
/// Default Sinkhorn stopping tolerance on the marginal residual.
pub const SINKHORN_TOL: f64 = 1e-12;
/// Default Sinkhorn sweep limit.
pub const SINKHORN_MAX_ITER: usize = 10_000;

/// Per-call overridable thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermitian: f64,
    pub positivity: f64,
    pub trace: f64,
    pub orthonormal: f64,
    pub completeness: f64,
    pub floor_rel: f64,
    pub probability_sum: f64,
    pub system: f64,
    pub bridging: f64,
    pub product: f64,
    pub normalization: f64,
    pub quadrature: f64,
    pub generalized_reversal: f64,
    pub weak_agreement: f64,
    pub overlap_guard: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian: HERMITIAN,
            positivity: POSITIVITY,
            trace: TRACE,
            orthonormal: ORTHONORMAL,
            completeness: COMPLETENESS,
            floor_rel: FLOOR_REL,
            probability_sum: PROBABILITY_SUM,
            system: SYSTEM,
            bridging: BRIDGING,
            product: PRODUCT,
            normalization: NORMALIZATION,
            quadrature: QUADRATURE,
            generalized_reversal: GENERALIZED_REVERSAL,
            weak_agreement: WEAK_AGREEMENT,
            overlap_guard: OVERLAP_GUARD,
        }
    }
}
