//! Projective intermediate measurement: outcome distributions, the split of the
//! updated channel into legs, and the time-reversed counterparts.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{floor_of, observable_of, segments, Segments};
use crate::bridge::{solve_bridge, BridgeSolution, SinkhornOptions};
use crate::check::{self, Check};
use crate::error::{Error, Result};
use crate::experiment::{prior_joint, ExperimentSpec, IntermediateMeasurement, PriorModel};
use crate::qcore::{
    adjoint_kraus, apply_kraus, completeness_defect, distance, hermitian_inv_sqrt, hermitian_sqrt,
    map_distance, CMat, DensityMatrix, Observable, PositiveDiagonalOperator,
};
use crate::reversal::{reverse_channel, ReversedBridge};
use crate::tolerance;

fn projective_parts(spec: &ExperimentSpec) -> Result<(Segments<'_>, &Observable)> {
    let seg = segments(spec)?;
    match &seg.split.intermediate {
        IntermediateMeasurement::Projective(_) => {}
        _ => {
            return Err(Error::SpecInvalid(
                "a projective intermediate measurement is required".into(),
            ))
        }
    }
    let obs = observable_of(seg.split)?;
    Ok((seg, obs))
}

/// `F[i][z] = Σ_l |⟨z| K_l(τ,0) |x_0^i⟩|²`
fn forward_factors(spec: &ExperimentSpec, seg: &Segments<'_>, obs: &Observable) -> DMatrix<f64> {
    let n = spec.dim();
    DMatrix::from_fn(n, obs.dim(), |i, z| {
        let x = spec.basis0.vector(i);
        seg.pre
            .iter()
            .map(|k| obs.basis().amplitude(z, k, &x).norm_sqr())
            .sum()
    })
}

/// `B[j][z] = Σ_{l'} |⟨y_1^j| K_{l'}(1,τ) |z⟩|²`
fn backward_factors(spec: &ExperimentSpec, seg: &Segments<'_>, obs: &Observable) -> DMatrix<f64> {
    let m = spec.basis1.dim();
    DMatrix::from_fn(m, obs.dim(), |j, z| {
        let zv = obs.basis().vector(z);
        seg.post
            .iter()
            .map(|k| spec.basis1.amplitude(j, k, &zv).norm_sqr())
            .sum()
    })
}

fn normalized(v: Vec<f64>, i: usize, j: usize) -> Result<Vec<f64>> {
    let total: f64 = v.iter().sum();
    if total.is_nan() || total <= tolerance::FLOOR_REL {
        return Err(Error::ZeroConditional {
            i,
            j,
            normalizer: total,
        });
    }
    Ok(v.into_iter().map(|x| x / total).collect())
}

/// `P_τ(z | x_0^i, y_1^j)` from the double sum over both segments' Kraus indices.
pub fn conditional_outcome_prob(spec: &ExperimentSpec, i: usize, j: usize) -> Result<Vec<f64>> {
    let (seg, obs) = projective_parts(spec)?;
    check_index(spec, i, j)?;
    let x = spec.basis0.vector(i);
    let raw = (0..obs.dim())
        .map(|z| {
            let zv = obs.basis().vector(z);
            let mut acc = 0.0;
            for kl in &seg.pre {
                let first = obs.basis().amplitude(z, kl, &x);
                for kl2 in &seg.post {
                    acc += (spec.basis1.amplitude(j, kl2, &zv) * first).norm_sqr();
                }
            }
            acc
        })
        .collect();
    normalized(raw, i, j)
}

/// Same conditional assembled from the separate forward and backward factor sums.
pub fn conditional_outcome_prob_assembled(
    spec: &ExperimentSpec,
    i: usize,
    j: usize,
) -> Result<Vec<f64>> {
    let (seg, obs) = projective_parts(spec)?;
    check_index(spec, i, j)?;
    let f = forward_factors(spec, &seg, obs);
    let b = backward_factors(spec, &seg, obs);
    normalized(
        (0..obs.dim()).map(|z| f[(i, z)] * b[(j, z)]).collect(),
        i,
        j,
    )
}

/// Conditional computed through the reversed segment maps, starting from `y_1^j`
/// and ending at `x_0^i`. Comparing it with [`conditional_outcome_prob`] reports
/// any asymmetry between the two time directions.
pub fn reversed_conditional_outcome_prob(
    spec: &ExperimentSpec,
    prior: &PriorModel,
    i: usize,
    j: usize,
) -> Result<Vec<f64>> {
    let (seg, obs) = projective_parts(spec)?;
    check_index(spec, i, j)?;
    let (first, second) = leg_families(spec, &seg, obs);
    let rho_tau = prior_tau_state(spec, &seg, obs)?;
    let n1 = reverse_channel(&ops_of(&first), &prior.rho0, &rho_tau)?;
    let n2 = reverse_channel(&ops_of(&second), &rho_tau, &prior.rho1)?;
    let x = spec.basis0.vector(i);
    let y = spec.basis1.vector(j);
    let mut raw = vec![0.0; obs.dim()];
    for (f, a) in first.iter().zip(&n1) {
        if f.from != i {
            continue;
        }
        let z = f.to;
        let zv = obs.basis().vector(z);
        let left = (x.adjoint() * a * &zv)[(0, 0)];
        for (s, b) in second.iter().zip(&n2) {
            if s.from != z || s.to != j {
                continue;
            }
            let right = obs.basis().amplitude(z, b, &y);
            raw[z] += (left * right).norm_sqr();
        }
    }
    normalized(raw, i, j)
}

fn check_index(spec: &ExperimentSpec, i: usize, j: usize) -> Result<()> {
    if i >= spec.dim() || j >= spec.basis1.dim() {
        return Err(Error::InvalidParameter(format!(
            "outcome pair ({i}, {j}) out of range"
        )));
    }
    Ok(())
}

/// Most likely distribution of the intermediate outcome, `P̃_τ(z) = φ(τ,z) φ̂(τ,z)`.
#[derive(Debug, Clone)]
pub struct IntermediateDistribution {
    pub tau: f64,
    pub outcomes: Vec<f64>,
    pub probs: Vec<f64>,
    /// `φ(τ,z) = Σ_j b_j Σ_{l'} |⟨y_1^j|K_{l'}(1,τ)|z⟩|²`
    pub varphi: Vec<f64>,
    /// `φ̂(τ,z) = Σ_i (α̃_i/a_i) Σ_l |⟨z|K_l(τ,0)|x_0^i⟩|²`
    pub varphi_hat: Vec<f64>,
    /// Prior outcome probabilities `P_τ(z)`.
    pub prior_probs: Vec<f64>,
    pub checks: Vec<Check>,
}

pub fn most_likely_projective_distribution(
    spec: &ExperimentSpec,
    bridge: &BridgeSolution,
) -> Result<IntermediateDistribution> {
    let (seg, obs) = projective_parts(spec)?;
    let n = spec.dim();
    let m = spec.basis1.dim();
    let nz = obs.dim();
    let f = forward_factors(spec, &seg, obs);
    let b = backward_factors(spec, &seg, obs);
    let alpha = &spec.alpha;
    let pot = &bridge.potentials;

    let mut prior_gap: f64 = 0.0;
    for i in 0..n {
        for j in 0..m {
            let p: f64 = alpha[i] * (0..nz).map(|z| f[(i, z)] * b[(j, z)]).sum::<f64>();
            prior_gap = prior_gap.max((p - bridge.prior_joint[(i, j)]).abs());
        }
    }

    let varphi_hat: Vec<f64> = (0..nz)
        .map(|z| {
            (0..n)
                .map(|i| spec.alpha_tilde[i] / pot.a[i] * f[(i, z)])
                .sum()
        })
        .collect();
    let varphi: Vec<f64> = (0..nz)
        .map(|z| (0..m).map(|j| pot.b[j] * b[(j, z)]).sum())
        .collect();
    for (name, v) in [("varphi", &varphi), ("varphi_hat", &varphi_hat)] {
        let floor = floor_of(v);
        if let Some((z, x)) = v.iter().enumerate().find(|(_, x)| **x <= floor) {
            return Err(Error::AssumptionViolated(format!(
                "{name}(tau, {z}) = {x:.3e} is not strictly positive"
            )));
        }
    }
    let probs: Vec<f64> = varphi.iter().zip(&varphi_hat).map(|(p, q)| p * q).collect();
    let prior_probs: Vec<f64> = (0..nz)
        .map(|z| (0..n).map(|i| alpha[i] * f[(i, z)]).sum())
        .collect();

    let q = bridge.coupling.matrix();
    let mut disintegrated = vec![0.0; nz];
    for i in 0..n {
        for j in 0..m {
            let cond = conditional_outcome_prob(spec, i, j)?;
            for z in 0..nz {
                disintegrated[z] += q[(i, j)] * cond[z];
            }
        }
    }
    let disintegration = probs
        .iter()
        .zip(&disintegrated)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let checks = check::ensure(vec![
        Check::new("bridge_prior", prior_gap, tolerance::PRODUCT),
        Check::new(
            "normalization",
            (probs.iter().sum::<f64>() - 1.0).abs(),
            tolerance::NORMALIZATION,
        ),
        Check::new("disintegration", disintegration, tolerance::PRODUCT),
    ])?;
    Ok(IntermediateDistribution {
        tau: seg.split.tau,
        outcomes: obs.eigenvalues().to_vec(),
        probs,
        varphi,
        varphi_hat,
        prior_probs,
        checks,
    })
}

/// One operator of a split leg with its index labels: `(i, l, z)` for the first
/// leg and `(z, l', j)` for the second.
#[derive(Debug, Clone, PartialEq)]
pub struct LegOperator {
    pub from: usize,
    pub k: usize,
    pub to: usize,
    pub op: CMat,
}

fn ops_of(leg: &[LegOperator]) -> Vec<CMat> {
    leg.iter().map(|l| l.op.clone()).collect()
}

/// Prior segment families `{Π_z K_l Π_0^i}` and `{Π_1^j K_{l'} Π_z}`.
fn leg_families(
    spec: &ExperimentSpec,
    seg: &Segments<'_>,
    obs: &Observable,
) -> (Vec<LegOperator>, Vec<LegOperator>) {
    let pz = obs.basis().projectors();
    let p0 = spec.basis0.projectors();
    let p1 = spec.basis1.projectors();
    let mut first = Vec::new();
    for (i, pi) in p0.iter().enumerate() {
        for (l, k) in seg.pre.iter().enumerate() {
            for (z, pzz) in pz.iter().enumerate() {
                first.push(LegOperator {
                    from: i,
                    k: l,
                    to: z,
                    op: pzz * k * pi,
                });
            }
        }
    }
    let mut second = Vec::new();
    for (z, pzz) in pz.iter().enumerate() {
        for (l, k) in seg.post.iter().enumerate() {
            for (j, pj) in p1.iter().enumerate() {
                second.push(LegOperator {
                    from: z,
                    k: l,
                    to: j,
                    op: pj * k * pzz,
                });
            }
        }
    }
    (first, second)
}

/// `ρ_τ = Σ_z P_τ(z) |z⟩⟨z|`, required to be invertible.
fn prior_tau_state(
    spec: &ExperimentSpec,
    seg: &Segments<'_>,
    obs: &Observable,
) -> Result<DensityMatrix> {
    let f = forward_factors(spec, seg, obs);
    let probs: Vec<f64> = (0..obs.dim())
        .map(|z| (0..spec.dim()).map(|i| spec.alpha[i] * f[(i, z)]).sum())
        .collect();
    if let Some((z, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| **p <= tolerance::FLOOR_REL)
    {
        return Err(Error::PriorDegenerate(format!(
            "P_tau({z}) = {p:.3e} is not strictly positive"
        )));
    }
    Ok(DensityMatrix::from_trusted(obs.basis().diagonal(&probs)))
}

fn scale_leg(leg: &[LegOperator], left: &CMat, right: &CMat) -> Vec<LegOperator> {
    leg.iter()
        .map(|l| LegOperator {
            op: left * &l.op * right,
            ..l.clone()
        })
        .collect()
}

/// Updated channel split at the intermediate time.
#[derive(Debug, Clone)]
pub struct SplitBridge {
    pub distribution: IntermediateDistribution,
    /// `ρ̃_τ = Σ_z P̃_τ(z) |z⟩⟨z|`
    pub rho_tau_tilde: DensityMatrix,
    /// `φ_τ^{1/2} Π_z K_l Π_0^i φ_0^{-1/2}`
    pub first_leg: Vec<LegOperator>,
    /// `φ_1^{1/2} Π_1^j K_{l'} Π_z φ_τ^{-1/2}`
    pub second_leg: Vec<LegOperator>,
    pub checks: Vec<Check>,
}

pub fn intermediate_state_and_split(
    spec: &ExperimentSpec,
    bridge: &BridgeSolution,
) -> Result<SplitBridge> {
    let distribution = most_likely_projective_distribution(spec, bridge)?;
    let (seg, obs) = projective_parts(spec)?;
    let phi_tau = PositiveDiagonalOperator::new(obs.basis().clone(), distribution.varphi.clone())?;
    crate::bridge::ensure_above_floor(&phi_tau)?;
    let phihat_tau = obs.basis().diagonal(&distribution.varphi_hat);
    let rho_tau_tilde = DensityMatrix::from_trusted(obs.basis().diagonal(&distribution.probs));

    let (first, second) = leg_families(spec, &seg, obs);
    let first_leg = scale_leg(&first, &phi_tau.sqrt(), &bridge.phi0.inv_sqrt());
    let second_leg = scale_leg(&second, &bridge.phi1.sqrt(), &phi_tau.inv_sqrt());
    let f_ops = ops_of(&first_leg);
    let s_ops = ops_of(&second_leg);

    let mut composed = Vec::new();
    for s in &second_leg {
        for f in first_leg.iter().filter(|f| f.to == s.from) {
            composed.push(&s.op * &f.op);
        }
    }
    let factored = phi_tau.sqrt() * &phihat_tau * phi_tau.sqrt();
    let checks = check::ensure(vec![
        Check::new(
            "first_leg_completeness",
            completeness_defect(&f_ops),
            tolerance::COMPLETENESS,
        ),
        Check::new(
            "second_leg_completeness",
            completeness_defect(&s_ops),
            tolerance::COMPLETENESS,
        ),
        Check::new(
            "first_leg_bridging",
            distance(
                &apply_kraus(&f_ops, bridge.rho0_tilde.matrix()),
                rho_tau_tilde.matrix(),
            ),
            tolerance::BRIDGING,
        ),
        Check::new(
            "second_leg_bridging",
            distance(
                &apply_kraus(&s_ops, rho_tau_tilde.matrix()),
                bridge.rho1_tilde.matrix(),
            ),
            tolerance::BRIDGING,
        ),
        Check::new(
            "leg_composition",
            map_distance(&composed, &bridge.updated_ops(), spec.dim()),
            tolerance::BRIDGING,
        ),
        Check::new(
            "factored_rho_tau",
            distance(&factored, rho_tau_tilde.matrix()),
            tolerance::SYSTEM,
        ),
    ])?;
    Ok(SplitBridge {
        distribution,
        rho_tau_tilde,
        first_leg,
        second_leg,
        checks,
    })
}

/// Reversed-time view of the intermediate distribution.
#[derive(Debug, Clone)]
pub struct ReversedDistribution {
    pub tau: f64,
    pub probs: Vec<f64>,
    /// `ψ(τ,z)`: adjoint of the reversed first segment applied to `ψ_0`.
    pub psi: Vec<f64>,
    /// `ψ̂(τ,z)`: reversed second segment applied to `ψ̂_1`.
    pub psi_hat: Vec<f64>,
    pub prior_probs: Vec<f64>,
    /// `Ñ(0,τ) = ψ_0^{1/2} N(0,τ) ψ_τ^{-1/2}`, labels `(i, l, z)`.
    pub first_reversed: Vec<LegOperator>,
    /// `Ñ(τ,1) = ψ_τ^{1/2} N(τ,1) ψ_1^{-1/2}`, labels `(z, l', j)`.
    pub second_reversed: Vec<LegOperator>,
    pub checks: Vec<Check>,
}

pub fn reversed_projective_distribution(
    spec: &ExperimentSpec,
    prior: &PriorModel,
    forward: &BridgeSolution,
    reversed: &ReversedBridge,
) -> Result<ReversedDistribution> {
    let split = intermediate_state_and_split(spec, forward)?;
    let fwd = &split.distribution;
    let (seg, obs) = projective_parts(spec)?;
    let (first, second) = leg_families(spec, &seg, obs);
    let rho_tau = prior_tau_state(spec, &seg, obs)?;
    let n1 = reverse_channel(&ops_of(&first), &prior.rho0, &rho_tau)?;
    let n2 = reverse_channel(&ops_of(&second), &rho_tau, &prior.rho1)?;

    let psi_mat = adjoint_kraus(&n1, &reversed.psi0.matrix());
    let psihat_mat = apply_kraus(&n2, &reversed.psihat1);
    let psi = obs.basis().diagonal_of(&psi_mat);
    let psi_hat = obs.basis().diagonal_of(&psihat_mat);
    let off_diagonal = distance(&psi_mat, &obs.basis().diagonal(&psi))
        .max(distance(&psihat_mat, &obs.basis().diagonal(&psi_hat)));
    let probs: Vec<f64> = psi.iter().zip(&psi_hat).map(|(a, b)| a * b).collect();
    let p_tau = &fwd.prior_probs;
    let nz = obs.dim();
    let max_gap = |v: Vec<f64>| {
        v.iter()
            .zip(&fwd.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let product_gap = max_gap(probs.clone());
    let rev1 = max_gap((0..nz).map(|z| psi[z] * p_tau[z] * fwd.varphi[z]).collect());
    let rev2 = max_gap(
        (0..nz)
            .map(|z| fwd.varphi_hat[z] / p_tau[z] * psi_hat[z])
            .collect(),
    );

    let psi_tau = PositiveDiagonalOperator::new(obs.basis().clone(), psi.clone())?;
    crate::bridge::ensure_above_floor(&psi_tau)?;
    let first_rev: Vec<LegOperator> = first
        .iter()
        .zip(&n1)
        .map(|(l, op)| LegOperator {
            op: reversed.psi0.sqrt() * op * psi_tau.inv_sqrt(),
            ..l.clone()
        })
        .collect();
    let second_rev: Vec<LegOperator> = second
        .iter()
        .zip(&n2)
        .map(|(l, op)| LegOperator {
            op: psi_tau.sqrt() * op * reversed.psi1.inv_sqrt(),
            ..l.clone()
        })
        .collect();
    let f_ops = ops_of(&first_rev);
    let s_ops = ops_of(&second_rev);

    let rho0t = forward.rho0_tilde.matrix();
    let rho1t = forward.rho1_tilde.matrix();
    let rhot = split.rho_tau_tilde.matrix();
    let first_equiv = equivalence_gap(&split.first_leg, &first_rev, rho0t, rhot)?;
    let second_equiv = equivalence_gap(&split.second_leg, &second_rev, rhot, rho1t)?;

    let checks = check::ensure(vec![
        Check::new("psi_diagonal", off_diagonal, tolerance::SYSTEM),
        Check::new("reversed_product", product_gap, tolerance::SYSTEM),
        Check::new("reversed_prior_form", rev1, tolerance::SYSTEM),
        Check::new("reversed_inverse_form", rev2, tolerance::SYSTEM),
        Check::new(
            "second_reversed_completeness",
            completeness_defect(&s_ops),
            tolerance::COMPLETENESS,
        ),
        Check::new(
            "first_reversed_completeness",
            completeness_defect(&f_ops),
            tolerance::COMPLETENESS,
        ),
        Check::new(
            "second_reversed_bridging",
            distance(&apply_kraus(&s_ops, rho1t), rhot),
            tolerance::BRIDGING,
        ),
        Check::new(
            "first_reversed_bridging",
            distance(&apply_kraus(&f_ops, rhot), rho0t),
            tolerance::BRIDGING,
        ),
        Check::new("first_leg_equivalence", first_equiv, tolerance::BRIDGING),
        Check::new("second_leg_equivalence", second_equiv, tolerance::BRIDGING),
    ])?;
    Ok(ReversedDistribution {
        tau: fwd.tau,
        probs,
        psi,
        psi_hat,
        prior_probs: fwd.prior_probs.clone(),
        first_reversed: first_rev,
        second_reversed: second_rev,
        checks,
    })
}

/// `max_k ‖ρ_in^{1/2} L_k† ρ_out^{-1/2} − Ñ_k‖_F` for a forward leg `L` from `ρ_in` to `ρ_out`.
fn equivalence_gap(
    forward: &[LegOperator],
    reversed: &[LegOperator],
    rho_in: &CMat,
    rho_out: &CMat,
) -> Result<f64> {
    let left = hermitian_sqrt(rho_in)?;
    let right = hermitian_inv_sqrt(rho_out, false)?;
    Ok(forward
        .iter()
        .zip(reversed)
        .map(|(l, n)| distance(&(&left * l.op.adjoint() * &right), &n.op))
        .fold(0.0, f64::max))
}

/// Prior and most likely intermediate distributions at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub prior: Vec<f64>,
    pub bridge: Vec<f64>,
}

/// Rebuilds the experiment at every `τ`, solves its bridge and evaluates both
/// distributions. Rows come back in input order.
pub fn projective_sweep(
    spec: &ExperimentSpec,
    taus: &[f64],
    opts: &SinkhornOptions,
) -> Result<Vec<SweepRow>> {
    taus.par_iter()
        .map(|&tau| {
            let at = spec.with_tau(tau)?;
            let prior = prior_joint(&at)?;
            let bridge = solve_bridge(&at, &prior, opts)?;
            let dist = most_likely_projective_distribution(&at, &bridge)?;
            Ok(SweepRow {
                tau,
                prior: dist.prior_probs,
                bridge: dist.probs,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{amplitude_damping_example, ChannelModel, SplitChannel};
    use crate::qcore::{c64, ChannelFamily, OrthonormalBasis};
    use crate::reversal::{solve_reverse_bridge, ReverseOptions};

    fn identity_split(
        basis0: OrthonormalBasis,
        basis1: OrthonormalBasis,
        obs: Observable,
    ) -> ExperimentSpec {
        let id = ChannelFamily::Identity { dim: 2 };
        ExperimentSpec::new(
            basis0,
            basis1,
            vec![0.5, 0.5],
            ChannelModel::Split(SplitChannel::new(
                id.clone(),
                IntermediateMeasurement::Projective(obs),
                id,
                0.5,
            )),
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        )
        .unwrap()
    }

    #[test]
    fn trivial_dynamics_reduce_to_bayes_rule() {
        let theta = 0.4f64;
        let b1 = OrthonormalBasis::new(CMat::from_row_slice(
            2,
            2,
            &[
                c64(theta.cos(), 0.0),
                c64(theta.sin(), 0.0),
                c64(-theta.sin(), 0.0),
                c64(theta.cos(), 0.0),
            ],
        ))
        .unwrap();
        let spec = identity_split(
            OrthonormalBasis::qubit_x(),
            b1.clone(),
            Observable::pauli_z(),
        );
        let z = OrthonormalBasis::computational(2);
        for i in 0..2 {
            for j in 0..2 {
                let x = spec.basis0.vector(i);
                let y = b1.vector(j);
                let w: Vec<f64> = (0..2)
                    .map(|k| {
                        let zv = z.vector(k);
                        ((y.adjoint() * &zv)[(0, 0)] * (zv.adjoint() * &x)[(0, 0)]).norm_sqr()
                    })
                    .collect();
                let total: f64 = w.iter().sum();
                let got = conditional_outcome_prob(&spec, i, j).unwrap();
                for k in 0..2 {
                    assert!((got[k] - w[k] / total).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn eigenstate_start_pins_outcome() {
        let spec = identity_split(
            OrthonormalBasis::computational(2),
            OrthonormalBasis::qubit_x(),
            Observable::pauli_z(),
        );
        let got = conditional_outcome_prob(&spec, 1, 0).unwrap();
        assert_eq!(got, vec![0.0, 1.0]);
    }

    #[test]
    fn unreachable_pair_is_reported() {
        let spec = identity_split(
            OrthonormalBasis::computational(2),
            OrthonormalBasis::computational(2),
            Observable::pauli_z(),
        );
        assert!(matches!(
            conditional_outcome_prob(&spec, 0, 1),
            Err(Error::ZeroConditional { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn two_routes_agree_on_amplitude_damping() {
        let spec = amplitude_damping_example(1.5, 0.5).unwrap();
        let direct = conditional_outcome_prob(&spec, 0, 0).unwrap();
        let assembled = conditional_outcome_prob_assembled(&spec, 0, 0).unwrap();
        for (a, b) in direct.iter().zip(&assembled) {
            assert!((a - b).abs() < 1e-12);
        }
        let prior = prior_joint(&spec).unwrap();
        let rev = reversed_conditional_outcome_prob(&spec, &prior, 0, 0).unwrap();
        for (a, b) in direct.iter().zip(&rev) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_damping_distribution_and_split() {
        let spec = amplitude_damping_example(1.5, 0.5).unwrap();
        let prior = prior_joint(&spec).unwrap();
        let bridge = solve_bridge(&spec, &prior, &SinkhornOptions::default()).unwrap();
        let split = intermediate_state_and_split(&spec, &bridge).unwrap();
        assert!(check::all_passed(&split.checks));
        let rev = solve_reverse_bridge(&spec, &prior, &bridge, &ReverseOptions::default()).unwrap();
        let rdist = reversed_projective_distribution(&spec, &prior, &bridge, &rev).unwrap();
        for (a, b) in rdist.probs.iter().zip(&split.distribution.probs) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn sweep_preserves_order() {
        let spec = amplitude_damping_example(1.5, 0.5).unwrap();
        let taus = [0.9, 0.1, 0.5];
        let rows = projective_sweep(&spec, &taus, &SinkhornOptions::default()).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.tau).collect::<Vec<_>>(),
            taus.to_vec()
        );
    }

    #[test]
    fn non_projective_intermediate_rejected() {
        let spec = crate::experiment::amplitude_damping_weak_example(1.5, 0.5, 1.0).unwrap();
        assert!(matches!(
            conditional_outcome_prob(&spec, 0, 0),
            Err(Error::SpecInvalid(_))
        ));
    }
}
