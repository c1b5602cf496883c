use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Dense complex square matrix; the carrier for states, observables and Kraus operators.
pub type CMat = DMatrix<Complex64>;
/// Dense complex column vector.
pub type CVec = DVector<Complex64>;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn ensure_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidParameter(
            "matrix dimension must be at least 1".into(),
        ));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(m.nrows())
}

pub fn ensure_dim(m: &CMat, n: usize) -> Result<()> {
    let d = ensure_square(m)?;
    if d != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: d,
        });
    }
    Ok(())
}

#[inline]
pub fn frobenius(m: &CMat) -> f64 {
    m.norm()
}

/// Frobenius distance between two matrices of equal shape.
pub fn distance(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm()
}

/// ‖A − A†‖_F / ‖A‖_F, with 0 for the zero matrix.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let scale = m.norm();
    if scale == 0.0 {
        return 0.0;
    }
    (m - m.adjoint()).norm() / scale
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// |u⟩⟨v|
pub fn outer(u: &CVec, v: &CVec) -> CMat {
    u * v.adjoint()
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real-valued trace of a product, `tr(A B)`.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    /// Reassembles `Σ f(λ_i) |v_i⟩⟨v_i|`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (col, &lam) in self.values.iter().enumerate() {
            let w = Complex64::new(f(lam), 0.0);
            for row in 0..n {
                scaled[(row, col)] *= w;
            }
        }
        hermitize(&(scaled * self.vectors.adjoint()))
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Eigendecomposition of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &CMat) -> HermitianEigen {
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    HermitianEigen { values, vectors }
}

fn checked_eigen(a: &CMat, tol: &Tolerances) -> Result<HermitianEigen> {
    ensure_square(a)?;
    let defect = hermitian_defect(a);
    if defect > crate::tolerance::SQRT_HERMITIAN.max(tol.hermitian) {
        return Err(Error::NotHermitian { violation: defect });
    }
    Ok(hermitian_eigen(a))
}

fn floor_of(eig: &HermitianEigen, tol: &Tolerances) -> f64 {
    tol.floor_rel * eig.max_abs()
}

/// Principal square root `A^{1/2}` of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues below the positivity floor are clamped to zero; eigenvalues more
/// negative than the floor are rejected.
pub fn hermitian_sqrt(a: &CMat) -> Result<CMat> {
    hermitian_sqrt_with(a, &Tolerances::default())
}

pub fn hermitian_sqrt_with(a: &CMat, tol: &Tolerances) -> Result<CMat> {
    let eig = checked_eigen(a, tol)?;
    let floor = floor_of(&eig, tol);
    if eig.min() < -floor {
        return Err(Error::NotPositive {
            min_eigenvalue: eig.min(),
        });
    }
    Ok(eig.map(|l| if l <= floor { 0.0 } else { l.sqrt() }))
}

/// Inverse square root `A^{-1/2}`.
///
/// With `pseudo_inverse` set, eigenvalues below the floor map to zero instead of
/// raising `SingularBelowFloor`.
pub fn hermitian_inv_sqrt(a: &CMat, pseudo_inverse: bool) -> Result<CMat> {
    hermitian_inv_sqrt_with(a, pseudo_inverse, &Tolerances::default())
}

pub fn hermitian_inv_sqrt_with(a: &CMat, pseudo_inverse: bool, tol: &Tolerances) -> Result<CMat> {
    hermitian_power(a, -0.5, pseudo_inverse, tol)
}

/// `A^{-1}` for Hermitian positive definite `A`.
pub fn hermitian_inverse(a: &CMat) -> Result<CMat> {
    hermitian_power(a, -1.0, false, &Tolerances::default())
}

fn hermitian_power(a: &CMat, power: f64, pseudo_inverse: bool, tol: &Tolerances) -> Result<CMat> {
    let eig = checked_eigen(a, tol)?;
    let floor = floor_of(&eig, tol);
    if eig.min() <= floor && !pseudo_inverse {
        return Err(Error::SingularBelowFloor {
            min_eigenvalue: eig.min(),
            floor,
        });
    }
    if eig.min() < -floor {
        return Err(Error::NotPositive {
            min_eigenvalue: eig.min(),
        });
    }
    Ok(eig.map(|l| if l <= floor { 0.0 } else { l.powf(power) }))
}
