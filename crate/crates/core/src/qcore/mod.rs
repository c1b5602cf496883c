//! Dense complex linear algebra and quantum-channel primitives.
//!
//! Hermitian eigendecomposition is the single primitive behind square roots,
//! inverse square roots and state validation.

mod channel;
mod family;
mod matrix;
mod state;

pub use channel::{
    adjoint_kraus, apply_adjoint_channel, apply_channel, apply_kraus, choi_matrix,
    completeness_defect, compose_channels, map_distance, unitary_evolution, KrausChannel,
};
pub use family::ChannelFamily;
pub use matrix::{
    c64, distance, ensure_dim, ensure_square, frobenius, hermitian_defect, hermitian_eigen,
    hermitian_inv_sqrt, hermitian_inv_sqrt_with, hermitian_inverse, hermitian_sqrt,
    hermitian_sqrt_with, hermitize, identity, outer, trace_product, CMat, CVec, HermitianEigen,
};
pub use state::{
    validate_density, validate_density_with, DensityMatrix, Observable, OrthonormalBasis,
    PositiveDiagonalOperator,
};
