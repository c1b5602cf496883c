//! Weak measurements: the Gaussian instrument, weak values and their most
//! likely ensemble average.

use nalgebra::DMatrix;

use super::{observable_of, segments, Quadrature};
use crate::bridge::BridgeSolution;
use crate::check::{self, Check};
use crate::error::{Error, Result};
use crate::experiment::{prior_joint, ExperimentSpec, IntermediateMeasurement};
use crate::qcore::{
    adjoint_kraus, apply_kraus, c64, hermitian_inv_sqrt, hermitian_sqrt, identity, trace_product,
    CMat, DensityMatrix, Observable,
};
use crate::reversal::{reverse_channel, ReversedBridge};
use crate::tolerance;

/// `Ω^δ_z̄ = (δ/2π)^{1/4} Σ_z e^{−δ(z−z̄)²/4} Π_z`
pub fn weak_operator(obs: &Observable, delta: f64, zbar: f64) -> Result<CMat> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "weak strength {delta} must be positive"
        )));
    }
    if !zbar.is_finite() {
        return Err(Error::InvalidParameter("readout must be finite".into()));
    }
    let pref = (delta / (2.0 * std::f64::consts::PI)).powf(0.25);
    let weights: Vec<f64> = obs
        .eigenvalues()
        .iter()
        .map(|z| pref * (-delta * (z - zbar).powi(2) / 4.0).exp())
        .collect();
    Ok(obs.basis().diagonal(&weights))
}

/// `‖∫ Ω†Ω dz̄ − I‖_F` under the given quadrature.
pub fn weak_normalization_defect(obs: &Observable, delta: f64, quad: &Quadrature) -> Result<f64> {
    let (nodes, h) = quad.grid(obs.min(), obs.max(), delta)?;
    let n = obs.dim();
    let last = nodes.len() - 1;
    let mut acc = CMat::zeros(n, n);
    for (k, &zbar) in nodes.iter().enumerate() {
        let omega = weak_operator(obs, delta, zbar)?;
        let w = if k == 0 || k == last { 0.5 * h } else { h };
        acc += omega.adjoint() * &omega * c64(w, 0.0);
    }
    Ok((acc - identity(n)).norm())
}

/// Backward-evolved post-selection `σ^j_τ` and forward-evolved preparation `σ̂^i_τ`.
fn sigma_pair(spec: &ExperimentSpec, i: usize, j: usize) -> Result<(CMat, CMat)> {
    if i >= spec.dim() || j >= spec.basis1.dim() {
        return Err(Error::InvalidParameter(format!(
            "outcome pair ({i}, {j}) out of range"
        )));
    }
    let seg = segments(spec)?;
    let sigma = adjoint_kraus(&seg.post, &spec.basis1.projector(j));
    let sigma_hat = apply_kraus(&seg.pre, &spec.basis0.projector(i));
    Ok((sigma, sigma_hat))
}

/// `Z_W^{ij} = Re[tr{σ^j_τ Z σ̂^i_τ} / tr{σ^j_τ σ̂^i_τ}]`
pub fn weak_value(spec: &ExperimentSpec, i: usize, j: usize) -> Result<f64> {
    let obs = observable_of(spec.split()?)?;
    let (sigma, sigma_hat) = sigma_pair(spec, i, j)?;
    let den = trace_product(&sigma, &sigma_hat);
    if den.norm() <= tolerance::OVERLAP_GUARD {
        return Err(Error::ZeroOverlap {
            overlap: den.norm(),
        });
    }
    Ok((trace_product(&sigma, &(obs.matrix() * &sigma_hat)) / den).re)
}

/// Weak values for every endpoint pair, rows indexed by the initial outcome.
pub fn weak_value_table(spec: &ExperimentSpec) -> Result<DMatrix<f64>> {
    let n = spec.dim();
    let m = spec.basis1.dim();
    let mut out = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            out[(i, j)] = weak_value(spec, i, j)?;
        }
    }
    Ok(out)
}

/// Conditional mean of a weak readout at finite strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDeltaAverage {
    pub delta: f64,
    /// Ratio of the trapezoid-integrated numerator and denominator.
    pub value: f64,
    /// The same ratio with both Gaussian integrals done in closed form.
    pub closed_form: f64,
    /// Relative error of the integrated denominator.
    pub normalization_defect: f64,
}

/// `∫ z̄ P_δ(z̄ | x_0^i, y_1^j) dz̄` with `P_δ ∝ tr{σ^j Ω^δ_z̄ σ̂^i Ω^δ_z̄†}`.
pub fn finite_delta_weak_average(
    spec: &ExperimentSpec,
    i: usize,
    j: usize,
    delta: f64,
    quad: &Quadrature,
) -> Result<FiniteDeltaAverage> {
    let obs = observable_of(spec.split()?)?;
    let (sigma, sigma_hat) = sigma_pair(spec, i, j)?;
    let (nodes, h) = quad.grid(obs.min(), obs.max(), delta)?;
    let mut num = Vec::with_capacity(nodes.len());
    let mut den = Vec::with_capacity(nodes.len());
    for &zbar in &nodes {
        let omega = weak_operator(obs, delta, zbar)?;
        let d = trace_product(&sigma, &(&omega * &sigma_hat * omega.adjoint())).re;
        den.push(d);
        num.push(zbar * d);
    }
    let num_q = Quadrature::integrate(&num, h);
    let den_q = Quadrature::integrate(&den, h);

    let b = obs.basis().matrix();
    let s = b.adjoint() * &sigma * b;
    let sh = b.adjoint() * &sigma_hat * b;
    let z = obs.eigenvalues();
    let (mut num_c, mut den_c) = (0.0, 0.0);
    for a in 0..z.len() {
        for c in 0..z.len() {
            let w = (s[(a, c)] * sh[(c, a)]).re * (-delta * (z[a] - z[c]).powi(2) / 8.0).exp();
            den_c += w;
            num_c += w * 0.5 * (z[a] + z[c]);
        }
    }
    if den_c.abs() <= tolerance::OVERLAP_GUARD {
        return Err(Error::ZeroOverlap {
            overlap: den_c.abs(),
        });
    }
    let normalization_defect = ((den_q - den_c) / den_c).abs();
    if normalization_defect > tolerance::QUADRATURE {
        return Err(Error::QuadratureTolExceeded {
            defect: normalization_defect,
            tol: tolerance::QUADRATURE,
        });
    }
    Ok(FiniteDeltaAverage {
        delta,
        value: num_q / den_q,
        closed_form: num_c / den_c,
        normalization_defect,
    })
}

#[derive(Debug, Clone)]
pub struct WeakValueResult {
    /// Forward form `Re tr(φ_τ Z φ̂_τ)`.
    pub value: f64,
    /// Reversed form `Re tr(ψ_τ Z^rev ψ̂_τ)`.
    pub reversed_value: f64,
    /// `Σ_ij p̃_ij Z_W^{ij}`.
    pub disintegration_value: f64,
    pub tau: f64,
    /// Zero: the value is the analytic `δ → 0` limit.
    pub delta_used: f64,
    /// Normalization defect of the weak family under the quadrature, zero without a weak slot.
    pub quadrature_error_estimate: f64,
    pub checks: Vec<Check>,
}

/// Most likely weak value in forward, reversed and disintegrated form.
///
/// Both bridges must be solved on the undisturbed experiment
/// [`ExperimentSpec::weak_limit`]; a bridge solved on another prior is rejected
/// with `ConsistencyViolation`.
pub fn most_likely_weak_value(
    spec: &ExperimentSpec,
    bridge: &BridgeSolution,
    reversed: &ReversedBridge,
    quad: &Quadrature,
) -> Result<WeakValueResult> {
    let split = spec.split()?;
    let obs = observable_of(split)?;
    let limit = spec.weak_limit();
    let prior = prior_joint(&limit)?;
    let prior_gap = (&bridge.prior_joint - &prior.joint).abs().max();
    if prior_gap > tolerance::PRODUCT {
        return Err(Error::ConsistencyViolation(vec![Check::new(
            "bridge_prior",
            prior_gap,
            tolerance::PRODUCT,
        )]));
    }
    let seg = segments(&limit)?;
    let z = obs.matrix();

    let phi_tau = adjoint_kraus(&seg.post, &bridge.phi1.matrix());
    let phihat_tau = apply_kraus(&seg.pre, &bridge.phihat0);
    let value = trace_product(&phi_tau, &(&z * &phihat_tau)).re;

    let rho_tau = DensityMatrix::from_trusted(apply_kraus(&seg.pre, prior.rho0.matrix()));
    let p0 = spec.basis0.projectors();
    let p1 = spec.basis1.projectors();
    let first: Vec<CMat> = seg
        .pre
        .iter()
        .flat_map(|k| p0.iter().map(move |pi| k * pi))
        .collect();
    let second: Vec<CMat> = seg
        .post
        .iter()
        .flat_map(|k| p1.iter().map(move |pj| pj * k))
        .collect();
    let n1 = reverse_channel(&first, &prior.rho0, &rho_tau)?;
    let n2 = reverse_channel(&second, &rho_tau, &prior.rho1)?;
    let psi_tau = adjoint_kraus(&n1, &reversed.psi0.matrix());
    let psihat_tau = apply_kraus(&n2, &reversed.psihat1);
    let z_rev =
        hermitian_sqrt(rho_tau.matrix())? * &z * hermitian_inv_sqrt(rho_tau.matrix(), false)?;
    let reversed_value = trace_product(&psi_tau, &(z_rev * &psihat_tau)).re;

    let q = bridge.coupling.matrix();
    let mut disintegration_value = 0.0;
    for ((i, j), &w) in q
        .iter()
        .enumerate()
        .map(|(k, w)| ((k % q.nrows(), k / q.nrows()), w))
    {
        if w > 0.0 {
            disintegration_value += w * weak_value(spec, i, j)?;
        }
    }

    let quadrature_error_estimate = match &split.intermediate {
        IntermediateMeasurement::Weak { observable, delta } => {
            weak_normalization_defect(observable, *delta, quad)?
        }
        _ => 0.0,
    };
    let checks = check::ensure(vec![
        Check::new("bridge_prior", prior_gap, tolerance::PRODUCT),
        Check::new(
            "forward_reversed",
            (value - reversed_value).abs(),
            tolerance::WEAK_AGREEMENT,
        ),
        Check::new(
            "disintegration",
            (value - disintegration_value).abs(),
            tolerance::SYSTEM,
        ),
        Check::new(
            "weak_normalization",
            quadrature_error_estimate,
            tolerance::QUADRATURE,
        ),
    ])?;
    Ok(WeakValueResult {
        value,
        reversed_value,
        disintegration_value,
        tau: split.tau,
        delta_used: 0.0,
        quadrature_error_estimate,
        checks,
    })
}
