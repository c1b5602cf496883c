use num_complex::Complex64;

use super::matrix::{c64, ensure_square, hermitize, identity, CMat};
use super::state::DensityMatrix;
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Completely positive trace-preserving map `ρ ↦ Σ_k K_k ρ K_k†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    ops: Vec<CMat>,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMat>) -> Result<Self> {
        Self::new_with(ops, &Tolerances::default())
    }

    pub fn new_with(ops: Vec<CMat>, tol: &Tolerances) -> Result<Self> {
        let dim = check_family(&ops)?;
        let defect = completeness_defect(&ops);
        if defect > tol.completeness {
            return Err(Error::Incomplete { defect });
        }
        Ok(Self { dim, ops })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            dim: n,
            ops: vec![identity(n)],
        }
    }

    pub fn unitary(u: CMat) -> Result<Self> {
        Self::new(vec![u])
    }

    /// `ρ ↦ (1−q) ρ + q tr(ρ) I/n`, written with `1 + n²` Kraus operators.
    pub fn depolarizing(n: usize, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!(
                "depolarizing probability {q} outside [0,1]"
            )));
        }
        let mut ops = Vec::with_capacity(1 + n * n);
        if q < 1.0 {
            ops.push(identity(n).scale((1.0 - q).sqrt()));
        }
        if q > 0.0 {
            let w = (q / n as f64).sqrt();
            for a in 0..n {
                for b in 0..n {
                    let mut k = CMat::zeros(n, n);
                    k[(a, b)] = c64(w, 0.0);
                    ops.push(k);
                }
            }
        }
        Self::new(ops)
    }

    /// Qubit amplitude damping with decay probability `lambda` (|1⟩ → |0⟩).
    pub fn amplitude_damping(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "damping probability {lambda} outside [0,1]"
            )));
        }
        let k0 = CMat::from_row_slice(
            2,
            2,
            &[
                c64(1.0, 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
                c64((1.0 - lambda).sqrt(), 0.0),
            ],
        );
        let k1 = CMat::from_row_slice(
            2,
            2,
            &[
                c64(0.0, 0.0),
                c64(lambda.sqrt(), 0.0),
                c64(0.0, 0.0),
                c64(0.0, 0.0),
            ],
        );
        Self::new(vec![k0, k1])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[CMat] {
        &self.ops
    }

    pub fn into_ops(self) -> Vec<CMat> {
        self.ops
    }

    pub fn completeness_defect(&self) -> f64 {
        completeness_defect(&self.ops)
    }
}

fn check_family(ops: &[CMat]) -> Result<usize> {
    let first = ops
        .first()
        .ok_or_else(|| Error::InvalidParameter("Kraus family is empty".into()))?;
    let dim = ensure_square(first)?;
    for op in ops {
        super::state::check_dim(op, dim)?;
    }
    Ok(dim)
}

/// ‖Σ_k K_k†K_k − I‖_F
pub fn completeness_defect(ops: &[CMat]) -> f64 {
    let Some(first) = ops.first() else {
        return f64::INFINITY;
    };
    let n = first.nrows();
    (adjoint_kraus(ops, &identity(n)) - identity(n)).norm()
}

/// `Σ_k K_k X K_k†` for an arbitrary operator family.
pub fn apply_kraus(ops: &[CMat], x: &CMat) -> CMat {
    let n = x.nrows();
    let mut out = CMat::zeros(n, n);
    for k in ops {
        out += k * x * k.adjoint();
    }
    out
}

/// `Σ_k K_k† X K_k` for an arbitrary operator family.
pub fn adjoint_kraus(ops: &[CMat], x: &CMat) -> CMat {
    let n = x.nrows();
    let mut out = CMat::zeros(n, n);
    for k in ops {
        out += k.adjoint() * x * k;
    }
    out
}

pub fn apply_channel(ch: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != ch.dim {
        return Err(Error::DimensionMismatch {
            expected: ch.dim,
            got: rho.dim(),
        });
    }
    Ok(DensityMatrix::from_trusted(apply_kraus(
        &ch.ops,
        rho.matrix(),
    )))
}

pub fn apply_adjoint_channel(ch: &KrausChannel, x: &CMat) -> Result<CMat> {
    super::state::check_dim(x, ch.dim)?;
    Ok(adjoint_kraus(&ch.ops, x))
}

/// The channel `second ∘ first`, with operators `B_j A_i` for every pair.
pub fn compose_channels(first: &KrausChannel, second: &KrausChannel) -> Result<KrausChannel> {
    if first.dim != second.dim {
        return Err(Error::DimensionMismatch {
            expected: first.dim,
            got: second.dim,
        });
    }
    let mut ops = Vec::with_capacity(first.ops.len() * second.ops.len());
    for b in &second.ops {
        for a in &first.ops {
            ops.push(b * a);
        }
    }
    KrausChannel::new(ops)
}

/// Choi matrix `Σ_k vec(K_k) vec(K_k)†` (column-stacking); equal maps have equal Choi matrices.
pub fn choi_matrix(ops: &[CMat], dim: usize) -> CMat {
    let d2 = dim * dim;
    let mut choi = CMat::zeros(d2, d2);
    for k in ops {
        let v = nalgebra::DVector::from_iterator(d2, k.iter().copied());
        choi += &v * v.adjoint();
    }
    hermitize(&choi)
}

/// Frobenius distance between the Choi matrices of two operator families.
pub fn map_distance(a: &[CMat], b: &[CMat], dim: usize) -> f64 {
    (choi_matrix(a, dim) - choi_matrix(b, dim)).norm()
}

/// `exp(-i H t)` for Hermitian `H`.
pub fn unitary_evolution(hamiltonian: &CMat, t: f64) -> CMat {
    let eig = super::matrix::hermitian_eigen(hamiltonian);
    let n = hamiltonian.nrows();
    let mut scaled = eig.vectors.clone();
    for (col, &lam) in eig.values.iter().enumerate() {
        let phase = Complex64::from_polar(1.0, -lam * t);
        for row in 0..n {
            scaled[(row, col)] *= phase;
        }
    }
    scaled * eig.vectors.adjoint()
}
