//! Generalized intermediate measurements, where the most likely outcome law keeps
//! its trace form `P̃(z̄) = tr{φ_{τ2} Ω_z̄ φ̂_{τ1} Ω_z̄†}` and does not factor into
//! scalar forward and backward functions.

use super::{segments, weak::weak_operator, Quadrature};
use crate::bridge::BridgeSolution;
use crate::check::{self, Check};
use crate::error::{Error, Result};
use crate::experiment::{ExperimentSpec, IntermediateMeasurement, PriorModel};
use crate::qcore::{
    adjoint_kraus, apply_kraus, hermitian_inv_sqrt, hermitian_sqrt, trace_product, CMat,
    DensityMatrix,
};
use crate::reversal::{reverse_channel, ReversedBridge};
use crate::tolerance;

/// Potentials and anchors on both sides of the measurement slot.
struct TraceForms {
    phi_after: CMat,
    phihat_before: CMat,
    psi_before: CMat,
    psihat_after: CMat,
    sqrt_before: CMat,
    inv_sqrt_after: CMat,
    prior_gap: f64,
}

impl TraceForms {
    fn new(
        spec: &ExperimentSpec,
        prior: &PriorModel,
        bridge: &BridgeSolution,
        reversed: &ReversedBridge,
    ) -> Result<Self> {
        let seg = segments(spec)?;
        let n = spec.dim();
        let before = DensityMatrix::from_trusted(apply_kraus(&seg.pre, prior.rho0.matrix()));
        let after = DensityMatrix::from_trusted(apply_kraus(
            &seg.split.intermediate.kraus_ops(n),
            before.matrix(),
        ));
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
        let n1 = reverse_channel(&first, &prior.rho0, &before)?;
        let n2 = reverse_channel(&second, &after, &prior.rho1)?;
        Ok(Self {
            phi_after: adjoint_kraus(&seg.post, &bridge.phi1.matrix()),
            phihat_before: apply_kraus(&seg.pre, &bridge.phihat0),
            psi_before: adjoint_kraus(&n1, &reversed.psi0.matrix()),
            psihat_after: apply_kraus(&n2, &reversed.psihat1),
            sqrt_before: hermitian_sqrt(before.matrix())?,
            inv_sqrt_after: hermitian_inv_sqrt(after.matrix(), false)?,
            prior_gap: (&bridge.prior_joint - &prior.joint).abs().max(),
        })
    }

    fn forward(&self, omega: &CMat) -> f64 {
        trace_product(
            &self.phi_after,
            &(omega * &self.phihat_before * omega.adjoint()),
        )
        .re
    }

    /// Same value through `Ω^rev = ρ_{τ1}^{1/2} Ω† ρ_{τ2}^{-1/2}` and the reversed potentials.
    fn reversed(&self, omega: &CMat) -> f64 {
        let rev = &self.sqrt_before * omega.adjoint() * &self.inv_sqrt_after;
        trace_product(
            &self.psi_before,
            &(&rev * &self.psihat_after * rev.adjoint()),
        )
        .re
    }
}

#[derive(Debug, Clone)]
pub struct GeneralizedDistribution {
    pub probs: Vec<f64>,
    pub reversed_probs: Vec<f64>,
    pub checks: Vec<Check>,
}

/// Most likely outcome distribution of a discrete generalized (or projective)
/// intermediate measurement, in forward and time-reversed trace form.
pub fn generalized_distribution(
    spec: &ExperimentSpec,
    prior: &PriorModel,
    bridge: &BridgeSolution,
    reversed: &ReversedBridge,
) -> Result<GeneralizedDistribution> {
    let split = spec.split()?;
    let family = match &split.intermediate {
        IntermediateMeasurement::Generalized(ops) => ops.clone(),
        IntermediateMeasurement::Projective(obs) => obs.basis().projectors(),
        _ => {
            return Err(Error::SpecInvalid(
                "a discrete generalized or projective intermediate measurement is required".into(),
            ))
        }
    };
    let forms = TraceForms::new(spec, prior, bridge, reversed)?;
    let probs: Vec<f64> = family.iter().map(|o| forms.forward(o)).collect();
    let reversed_probs: Vec<f64> = family.iter().map(|o| forms.reversed(o)).collect();
    let mass_defect = (probs.iter().sum::<f64>() - 1.0).abs();
    if mass_defect > tolerance::QUADRATURE {
        return Err(Error::QuadratureTolExceeded {
            defect: mass_defect,
            tol: tolerance::QUADRATURE,
        });
    }
    let gap = probs
        .iter()
        .zip(&reversed_probs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let checks = check::ensure(vec![
        Check::new("bridge_prior", forms.prior_gap, tolerance::PRODUCT),
        Check::new("mass", mass_defect, tolerance::QUADRATURE),
        Check::new("reversed_trace_form", gap, tolerance::GENERALIZED_REVERSAL),
    ])?;
    Ok(GeneralizedDistribution {
        probs,
        reversed_probs,
        checks,
    })
}

/// Most likely density of a weak readout `z̄`, sampled on the quadrature grid.
#[derive(Debug, Clone)]
pub struct WeakOutcomeDensity {
    pub nodes: Vec<f64>,
    pub spacing: f64,
    pub density: Vec<f64>,
    pub reversed_density: Vec<f64>,
    pub mass: f64,
    pub checks: Vec<Check>,
}

pub fn weak_outcome_density(
    spec: &ExperimentSpec,
    prior: &PriorModel,
    bridge: &BridgeSolution,
    reversed: &ReversedBridge,
    quad: &Quadrature,
) -> Result<WeakOutcomeDensity> {
    let split = spec.split()?;
    let (obs, delta) = match &split.intermediate {
        IntermediateMeasurement::Weak { observable, delta } => (observable, *delta),
        _ => {
            return Err(Error::SpecInvalid(
                "a weak intermediate measurement is required".into(),
            ))
        }
    };
    let forms = TraceForms::new(spec, prior, bridge, reversed)?;
    let (nodes, spacing) = quad.grid(obs.min(), obs.max(), delta)?;
    let mut density = Vec::with_capacity(nodes.len());
    let mut reversed_density = Vec::with_capacity(nodes.len());
    for &zbar in &nodes {
        let omega = weak_operator(obs, delta, zbar)?;
        density.push(forms.forward(&omega));
        reversed_density.push(forms.reversed(&omega));
    }
    let mass = Quadrature::integrate(&density, spacing);
    let mass_defect = (mass - 1.0).abs();
    if mass_defect > tolerance::QUADRATURE {
        return Err(Error::QuadratureTolExceeded {
            defect: mass_defect,
            tol: tolerance::QUADRATURE,
        });
    }
    let gap = density
        .iter()
        .zip(&reversed_density)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let checks = check::ensure(vec![
        Check::new("bridge_prior", forms.prior_gap, tolerance::PRODUCT),
        Check::new("mass", mass_defect, tolerance::QUADRATURE),
        Check::new("reversed_trace_form", gap, tolerance::GENERALIZED_REVERSAL),
    ])?;
    Ok(WeakOutcomeDensity {
        nodes,
        spacing,
        density,
        reversed_density,
        mass,
        checks,
    })
}
