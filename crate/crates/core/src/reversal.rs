//! Time reversal of channels and of the bridge.
//!
//! The reversed prior operators are `M = ρ_0^{1/2} L† ρ_1^{-1/2}`; the reversed
//! potentials follow in closed form from `α̃_i = a_i c_i α_i` and
//! `β̃_j = b_j d_j β_j`, and `M̃ = ψ_0^{1/2} M ψ_1^{-1/2}` bridges `ρ̃_1` back to `ρ̃_0`.

use nalgebra::DMatrix;

use crate::bridge::{solve_coupling, BridgeSolution, SinkhornOptions};
use crate::check::Check;
use crate::error::{Error, Result};
use crate::experiment::{selected_ops, ExperimentSpec, PriorModel, SelectedKraus};
use crate::qcore::{
    adjoint_kraus, apply_kraus, completeness_defect, distance, hermitian_defect,
    hermitian_inv_sqrt_with, hermitian_inverse, hermitian_sqrt_with, CMat, DensityMatrix,
    PositiveDiagonalOperator,
};
use crate::tolerance::Tolerances;

/// `M_k = ρ_in^{1/2} L_k† ρ_out^{-1/2}`, which maps `ρ_out` back to `ρ_in`.
pub fn reverse_channel(
    ops: &[CMat],
    rho_in: &DensityMatrix,
    rho_out: &DensityMatrix,
) -> Result<Vec<CMat>> {
    reverse_channel_with(ops, rho_in, rho_out, &Tolerances::default())
}

pub fn reverse_channel_with(
    ops: &[CMat],
    rho_in: &DensityMatrix,
    rho_out: &DensityMatrix,
    tol: &Tolerances,
) -> Result<Vec<CMat>> {
    let left = hermitian_sqrt_with(rho_in.matrix(), tol)?;
    let right = hermitian_inv_sqrt_with(rho_out.matrix(), false, tol)?;
    Ok(ops.iter().map(|l| &left * l.adjoint() * &right).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ReverseOptions {
    /// Also solve the reversed coupling problem by Sinkhorn and compare potentials.
    pub independent_solve: bool,
    pub sinkhorn: SinkhornOptions,
}

#[derive(Debug, Clone)]
pub struct ReversedBridge {
    pub reversed_kraus: Vec<SelectedKraus>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub psi0: PositiveDiagonalOperator,
    pub psi1: PositiveDiagonalOperator,
    pub psihat0: CMat,
    pub psihat1: CMat,
    pub updated_reversed_kraus: Vec<SelectedKraus>,
    /// `(c_i / d_j)(β̃_j / β_j) p_ij`
    pub reversed_coupling: DMatrix<f64>,
    pub checks: Vec<Check>,
}

impl ReversedBridge {
    pub fn reversed_ops(&self) -> Vec<CMat> {
        selected_ops(&self.reversed_kraus)
    }

    pub fn updated_ops(&self) -> Vec<CMat> {
        selected_ops(&self.updated_reversed_kraus)
    }
}

pub fn solve_reverse_bridge(
    spec: &ExperimentSpec,
    prior: &PriorModel,
    forward: &BridgeSolution,
    opts: &ReverseOptions,
) -> Result<ReversedBridge> {
    solve_reverse_bridge_with(spec, prior, forward, opts, &Tolerances::default())
}

/// Reversed bridge from the forward solution, with its consistency checks.
///
/// Fails with `ConsistencyViolation` (carrying all checks) if an identity is violated.
pub fn solve_reverse_bridge_with(
    spec: &ExperimentSpec,
    prior: &PriorModel,
    forward: &BridgeSolution,
    opts: &ReverseOptions,
    tol: &Tolerances,
) -> Result<ReversedBridge> {
    let n = spec.dim();
    let m = spec.basis1.dim();
    let a = &forward.potentials.a;
    let b = &forward.potentials.b;
    let reversed_ops = reverse_channel_with(&prior.selected_ops(), &prior.rho0, &prior.rho1, tol)?;
    let reversed_kraus: Vec<SelectedKraus> = prior
        .selected_kraus
        .iter()
        .zip(reversed_ops)
        .map(|(s, op)| SelectedKraus { op, ..s.clone() })
        .collect();

    let c: Vec<f64> = (0..n)
        .map(|i| spec.alpha_tilde[i] / (a[i] * prior.alpha[i]))
        .collect();
    let d: Vec<f64> = (0..m)
        .map(|j| spec.beta_tilde[j] / (b[j] * prior.beta[j]))
        .collect();
    let psi0 = PositiveDiagonalOperator::new(spec.basis0.clone(), c.clone())?;
    let psi1 = PositiveDiagonalOperator::new(spec.basis1.clone(), d.clone())?;
    crate::bridge::ensure_above_floor(&psi1)?;
    let hat0: Vec<f64> = (0..n).map(|i| spec.alpha_tilde[i] / c[i]).collect();
    let hat1: Vec<f64> = (0..m).map(|j| spec.beta_tilde[j] / d[j]).collect();
    let psihat0 = spec.basis0.diagonal(&hat0);
    let psihat1 = spec.basis1.diagonal(&hat1);

    let left = psi0.sqrt();
    let right = psi1.inv_sqrt();
    let updated_reversed_kraus: Vec<SelectedKraus> = reversed_kraus
        .iter()
        .map(|s| SelectedKraus {
            op: &left * &s.op * &right,
            ..s.clone()
        })
        .collect();

    let p = &prior.joint;
    let reversed_coupling = DMatrix::from_fn(n, m, |i, j| {
        (c[i] / d[j]) * (spec.beta_tilde[j] / prior.beta[j]) * p[(i, j)]
    });

    let mops = selected_ops(&reversed_kraus);
    let uops = selected_ops(&updated_reversed_kraus);
    let rho0t = spec.rho0_tilde()?;
    let rho1t = spec.rho1_tilde()?;
    let coeff_alpha = (0..n)
        .map(|i| (spec.alpha_tilde[i] - a[i] * c[i] * prior.alpha[i]).abs())
        .fold(0.0, f64::max);
    let coeff_beta = (0..m)
        .map(|j| (spec.beta_tilde[j] - b[j] * d[j] * prior.beta[j]).abs())
        .fold(0.0, f64::max);
    let mut checks = vec![
        Check::new(
            "reversed_completeness",
            completeness_defect(&mops),
            tol.completeness,
        ),
        Check::new(
            "reversed_prior_map",
            distance(
                &apply_kraus(&mops, prior.rho1.matrix()),
                prior.rho0.matrix(),
            ),
            tol.bridging,
        ),
        Check::new(
            "updated_reversed_completeness",
            completeness_defect(&uops),
            tol.completeness,
        ),
        Check::new(
            "reversed_bridging",
            distance(&apply_kraus(&uops, rho1t.matrix()), rho0t.matrix()),
            tol.bridging,
        ),
        Check::new(
            "reversed_adjoint_potential",
            distance(&adjoint_kraus(&mops, &psi0.matrix()), &psi1.matrix()),
            tol.system,
        ),
        Check::new(
            "reversed_forward_potential",
            distance(&apply_kraus(&mops, &psihat1), &psihat0),
            tol.system,
        ),
        Check::new("coefficients_initial", coeff_alpha, tol.system),
        Check::new("coefficients_final", coeff_beta, tol.system),
        Check::new(
            "reversed_potential_trace",
            (psihat0.trace() - psihat1.trace()).norm(),
            tol.system,
        ),
        Check::new(
            "reversed_coupling",
            (&reversed_coupling - forward.coupling.matrix()).abs().max(),
            tol.system,
        ),
    ];
    if opts.independent_solve {
        // The reversed problem is the forward one on pᵀ with the roles of (α̃, β̃) swapped:
        // its potentials (a', b') equal (d, c) up to one common scale.
        let solve = solve_coupling(
            &p.transpose(),
            &spec.beta_tilde,
            &spec.alpha_tilde,
            &opts.sinkhorn,
        )?;
        let scale: f64 = c.iter().sum::<f64>() / solve.potentials.b.iter().sum::<f64>();
        let dc = c
            .iter()
            .zip(&solve.potentials.b)
            .map(|(x, y)| (x - scale * y).abs())
            .fold(0.0, f64::max);
        let dd = d
            .iter()
            .zip(&solve.potentials.a)
            .map(|(x, y)| (x - scale * y).abs())
            .fold(0.0, f64::max);
        let dq = (solve.coupling.matrix().transpose() - &reversed_coupling)
            .abs()
            .max();
        checks.push(Check::new(
            "independent_potentials",
            dc.max(dd),
            tol.bridging,
        ));
        checks.push(Check::new("independent_coupling", dq, tol.bridging));
    }
    let checks = crate::check::ensure(checks)?;
    Ok(ReversedBridge {
        reversed_kraus,
        c,
        d,
        psi0,
        psi1,
        psihat0,
        psihat1,
        updated_reversed_kraus,
        reversed_coupling,
        checks,
    })
}

/// Operator-level equivalence `M̃ = ρ̃_0^{1/2} L̃† ρ̃_1^{-1/2}` and the time-symmetric
/// factorizations `ρ̃ = ψ ρ φ = ψ̂ ρ^{-1} φ̂` at both ends.
pub fn check_equivalence(
    prior: &PriorModel,
    forward: &BridgeSolution,
    reversed: &ReversedBridge,
) -> Result<Vec<Check>> {
    check_equivalence_with(prior, forward, reversed, &Tolerances::default())
}

pub fn check_equivalence_with(
    prior: &PriorModel,
    forward: &BridgeSolution,
    reversed: &ReversedBridge,
    tol: &Tolerances,
) -> Result<Vec<Check>> {
    let rho0t = forward.rho0_tilde.matrix();
    let rho1t = forward.rho1_tilde.matrix();
    let left = hermitian_sqrt_with(rho0t, tol)?;
    let right = hermitian_inv_sqrt_with(rho1t, false, tol)?;
    let op_residual = forward
        .updated_kraus
        .iter()
        .zip(&reversed.updated_reversed_kraus)
        .map(|(l, m)| distance(&(&left * l.op.adjoint() * &right), &m.op))
        .fold(0.0, f64::max);

    let sym0 = reversed.psi0.matrix() * prior.rho0.matrix() * forward.phi0.matrix();
    let sym1 = reversed.psi1.matrix() * prior.rho1.matrix() * forward.phi1.matrix();
    let hat0 = &reversed.psihat0 * hermitian_inverse(prior.rho0.matrix())? * &forward.phihat0;
    let hat1 = &reversed.psihat1 * hermitian_inverse(prior.rho1.matrix())? * &forward.phihat1;
    let herm = [&sym0, &sym1, &hat0, &hat1]
        .iter()
        .map(|m| hermitian_defect(m))
        .fold(0.0, f64::max);

    let checks = vec![
        Check::new("equivalence_operators", op_residual, tol.bridging),
        Check::new("symmetric_rho0", distance(&sym0, rho0t), tol.system),
        Check::new("symmetric_rho1", distance(&sym1, rho1t), tol.system),
        Check::new("symmetric_hat_rho0", distance(&hat0, rho0t), tol.system),
        Check::new("symmetric_hat_rho1", distance(&hat1, rho1t), tol.system),
        Check::new("symmetric_hermiticity", herm, tol.system),
    ];
    if crate::check::all_passed(&checks) {
        Ok(checks)
    } else {
        Err(Error::EquivalenceViolation(checks))
    }
}
