use num_complex::Complex64;

use super::matrix::{
    c64, ensure_dim, ensure_square, hermitian_defect, hermitian_eigen, hermitize, identity, outer,
    CMat, CVec,
};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMat);

impl DensityMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        validate_density(m)
    }

    /// Wraps a matrix already known to be a state up to round-off; it is hermitized.
    pub(crate) fn from_trusted(m: CMat) -> Self {
        Self(hermitize(&m))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(identity(n).scale(1.0 / n as f64))
    }

    /// `Σ_i w_i |v_i⟩⟨v_i|` for a probability vector `w`.
    pub fn diagonal_in(basis: &OrthonormalBasis, weights: &[f64]) -> Result<Self> {
        if weights.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: weights.len(),
            });
        }
        validate_density(basis.diagonal(weights))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }
}

pub fn validate_density(m: CMat) -> Result<DensityMatrix> {
    validate_density_with(m, &Tolerances::default())
}

/// Checks Hermiticity, positivity and unit trace, reporting the measured violation.
pub fn validate_density_with(m: CMat, tol: &Tolerances) -> Result<DensityMatrix> {
    ensure_square(&m)?;
    let defect = hermitian_defect(&m);
    if defect > tol.hermitian {
        return Err(Error::NotHermitian { violation: defect });
    }
    let eig = hermitian_eigen(&m);
    if eig.min() < -tol.positivity {
        return Err(Error::NotPositive {
            min_eigenvalue: eig.min(),
        });
    }
    let trace = m.trace().re;
    if (trace - 1.0).abs() > tol.trace {
        return Err(Error::TraceNotOne { trace });
    }
    Ok(DensityMatrix(hermitize(&m)))
}

/// Orthonormal basis stored as the columns of a unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    vectors: CMat,
}

impl OrthonormalBasis {
    /// Columns of `vectors` are the basis vectors.
    pub fn new(vectors: CMat) -> Result<Self> {
        Self::new_with(vectors, &Tolerances::default())
    }

    pub fn new_with(vectors: CMat, tol: &Tolerances) -> Result<Self> {
        let n = ensure_square(&vectors)?;
        let defect = (vectors.adjoint() * &vectors - identity(n)).norm();
        if defect > tol.orthonormal {
            return Err(Error::NotOrthonormal { defect });
        }
        Ok(Self { vectors })
    }

    pub fn computational(n: usize) -> Self {
        Self {
            vectors: identity(n),
        }
    }

    /// Eigenbasis of σ_x: |0⟩_x = (|0⟩+|1⟩)/√2, |1⟩_x = (|0⟩−|1⟩)/√2.
    pub fn qubit_x() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            vectors: CMat::from_row_slice(
                2,
                2,
                &[c64(s, 0.0), c64(s, 0.0), c64(s, 0.0), c64(-s, 0.0)],
            ),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> CVec {
        self.vectors.column(i).into_owned()
    }

    /// |v_i⟩⟨v_i|
    pub fn projector(&self, i: usize) -> CMat {
        let v = self.vector(i);
        outer(&v, &v)
    }

    pub fn projectors(&self) -> Vec<CMat> {
        (0..self.dim()).map(|i| self.projector(i)).collect()
    }

    /// `Σ_i w_i |v_i⟩⟨v_i|` (no positivity requirement on `w`).
    pub fn diagonal(&self, weights: &[f64]) -> CMat {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for (col, &w) in weights.iter().enumerate().take(n) {
            for row in 0..n {
                scaled[(row, col)] *= Complex64::new(w, 0.0);
            }
        }
        hermitize(&(scaled * self.vectors.adjoint()))
    }

    /// ⟨v_i| A |v_i⟩ for every i (real parts).
    pub fn diagonal_of(&self, a: &CMat) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let v = self.vectors.column(i);
                (v.adjoint() * a * v)[(0, 0)].re
            })
            .collect()
    }

    /// ⟨v_i| A |u⟩
    pub fn amplitude(&self, i: usize, a: &CMat, u: &CVec) -> Complex64 {
        (self.vectors.column(i).adjoint() * a * u)[(0, 0)]
    }
}

/// `Σ_i w_i |v_i⟩⟨v_i|` with strictly positive weights (φ, ψ and friends).
#[derive(Debug, Clone, PartialEq)]
pub struct PositiveDiagonalOperator {
    basis: OrthonormalBasis,
    weights: Vec<f64>,
}

impl PositiveDiagonalOperator {
    pub fn new(basis: OrthonormalBasis, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
            return Err(Error::AssumptionViolated(format!(
                "diagonal operator weight {w} is not strictly positive"
            )));
        }
        Ok(Self { basis, weights })
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn matrix(&self) -> CMat {
        self.power(1.0)
    }

    pub fn sqrt(&self) -> CMat {
        self.power(0.5)
    }

    pub fn inv_sqrt(&self) -> CMat {
        self.power(-0.5)
    }

    pub fn power(&self, p: f64) -> CMat {
        let w: Vec<f64> = self.weights.iter().map(|w| w.powf(p)).collect();
        self.basis.diagonal(&w)
    }
}

/// Non-degenerate observable `Σ_z z |z⟩⟨z|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    basis: OrthonormalBasis,
    eigenvalues: Vec<f64>,
}

impl Observable {
    pub fn new(basis: OrthonormalBasis, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: eigenvalues.len(),
            });
        }
        if eigenvalues.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite);
        }
        for a in 0..eigenvalues.len() {
            for b in a + 1..eigenvalues.len() {
                if eigenvalues[a] == eigenvalues[b] {
                    return Err(Error::SpecInvalid(format!(
                        "observable is degenerate: eigenvalue {} repeats",
                        eigenvalues[a]
                    )));
                }
            }
        }
        Ok(Self { basis, eigenvalues })
    }

    /// σ_z with eigenvalue +1 on |0⟩ and −1 on |1⟩.
    pub fn pauli_z() -> Self {
        Self {
            basis: OrthonormalBasis::computational(2),
            eigenvalues: vec![1.0, -1.0],
        }
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn matrix(&self) -> CMat {
        self.basis.diagonal(&self.eigenvalues)
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub(crate) fn check_dim(m: &CMat, n: usize) -> Result<()> {
    ensure_dim(m, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maximally_mixed_is_valid() {
        assert!(validate_density(identity(2).scale(0.5)).is_ok());
    }

    #[test]
    fn x_basis_state_is_valid() {
        let rho = DensityMatrix::diagonal_in(&OrthonormalBasis::qubit_x(), &[2.0 / 3.0, 1.0 / 3.0]);
        assert!(rho.is_ok());
    }

    #[test]
    fn trace_violation_reported() {
        let m = identity(2).scale(0.6);
        match validate_density(m) {
            Err(Error::TraceNotOne { trace }) => assert!((trace - 1.2).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_eigenvalue_reported() {
        let m = OrthonormalBasis::computational(2).diagonal(&[1.2, -0.2]);
        assert!(matches!(
            validate_density(m),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn non_hermitian_reported() {
        let mut m = identity(2).scale(0.5);
        m[(0, 1)] = c64(0.1, 0.0);
        assert!(matches!(
            validate_density(m),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let m = CMat::from_row_slice(
            2,
            2,
            &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
        );
        assert!(matches!(
            OrthonormalBasis::new(m),
            Err(Error::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn degenerate_observable_rejected() {
        let b = OrthonormalBasis::computational(2);
        assert!(Observable::new(b, vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn positive_diagonal_powers() {
        let op =
            PositiveDiagonalOperator::new(OrthonormalBasis::qubit_x(), vec![4.0, 0.25]).unwrap();
        let prod = op.sqrt() * op.inv_sqrt();
        assert!((prod - identity(2)).norm() < 1e-14);
        assert!(
            PositiveDiagonalOperator::new(OrthonormalBasis::qubit_x(), vec![1.0, 0.0]).is_err()
        );
    }
}
