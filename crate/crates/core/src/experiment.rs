//! Pre/post-selected experiment model and its prior statistics.
//!
//! An experiment prepares `|x_0^i⟩` with probability `α_i`, evolves under a
//! Kraus channel (optionally split at `τ` by an unreported intermediate
//! measurement), and ends with a projective measurement in `{|y_1^j⟩}`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::qcore::{
    apply_channel, apply_kraus, c64, completeness_defect, hermitian_eigen, CMat, ChannelFamily,
    DensityMatrix, KrausChannel, Observable, OrthonormalBasis,
};
use crate::tolerance;

/// Quantum instrument acting between the two evolution segments.
#[derive(Debug, Clone, PartialEq)]
pub enum IntermediateMeasurement {
    /// No measurement: the segments compose directly.
    None,
    /// Ideal projective measurement of a non-degenerate observable.
    Projective(Observable),
    /// Discrete generalized measurement `{Ω_z̄}` with `Σ Ω†Ω = I`.
    Generalized(Vec<CMat>),
    /// Gaussian weak measurement `Ω^δ_z̄` of the observable, outcome `z̄ ∈ ℝ`.
    Weak { observable: Observable, delta: f64 },
}

impl IntermediateMeasurement {
    pub fn observable(&self) -> Option<&Observable> {
        match self {
            Self::Projective(o) | Self::Weak { observable: o, .. } => Some(o),
            _ => None,
        }
    }

    /// Kraus operators of the non-selective measurement map.
    ///
    /// For the weak measurement this is the exact dephasing map
    /// `∫ Ω ρ Ω† dz̄ = Σ_{z,z'} e^{−δ(z−z')²/8} Π_z ρ Π_z'`, factored through the
    /// eigendecomposition of its Gaussian kernel.
    pub fn kraus_ops(&self, dim: usize) -> Vec<CMat> {
        match self {
            Self::None => vec![CMat::identity(dim, dim)],
            Self::Projective(o) => o.basis().projectors(),
            Self::Generalized(ops) => ops.clone(),
            Self::Weak { observable, delta } => dephasing_ops(observable, *delta),
        }
    }
}

fn dephasing_ops(obs: &Observable, delta: f64) -> Vec<CMat> {
    let z = obs.eigenvalues();
    let n = z.len();
    let kernel = CMat::from_fn(n, n, |a, b| {
        c64((-delta * (z[a] - z[b]).powi(2) / 8.0).exp(), 0.0)
    });
    let eig = hermitian_eigen(&kernel);
    let floor = tolerance::FLOOR_REL * eig.max_abs();
    eig.values
        .iter()
        .enumerate()
        .filter(|(_, &mu)| mu > floor)
        .map(|(r, &mu)| {
            let mut op = CMat::zeros(n, n);
            for zi in 0..n {
                op += obs.basis().projector(zi) * (eig.vectors[(zi, r)] * mu.sqrt());
            }
            op
        })
        .collect()
}

/// Evolution split at `τ` by an intermediate measurement occupying `[τ, τ_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitChannel {
    pub pre: ChannelFamily,
    pub post: ChannelFamily,
    pub intermediate: IntermediateMeasurement,
    pub tau: f64,
    pub tau_end: f64,
}

impl SplitChannel {
    pub fn new(
        pre: ChannelFamily,
        intermediate: IntermediateMeasurement,
        post: ChannelFamily,
        tau: f64,
    ) -> Self {
        Self {
            pre,
            post,
            intermediate,
            tau,
            tau_end: tau,
        }
    }

    /// Channel over `(0, τ)`.
    pub fn pre_channel(&self) -> Result<KrausChannel> {
        self.pre.channel(0.0, self.tau)
    }

    /// Channel over `(τ_end, 1)`.
    pub fn post_channel(&self) -> Result<KrausChannel> {
        self.post.channel(self.tau_end, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel {
    Single(KrausChannel),
    Split(SplitChannel),
}

/// A composed Kraus operator `L_k(1,0)` with its multi-index `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledOp {
    pub k: Vec<usize>,
    pub op: CMat,
}

/// Rank-one-selected operator `L_ikj = Π_1^j L_k Π_0^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedKraus {
    pub i: usize,
    pub k: Vec<usize>,
    pub j: usize,
    pub op: CMat,
}

pub fn selected_ops(family: &[SelectedKraus]) -> Vec<CMat> {
    family.iter().map(|s| s.op.clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub basis0: OrthonormalBasis,
    pub basis1: OrthonormalBasis,
    pub alpha: Vec<f64>,
    pub channel: ChannelModel,
    pub alpha_tilde: Vec<f64>,
    pub beta_tilde: Vec<f64>,
}

impl ExperimentSpec {
    pub fn new(
        basis0: OrthonormalBasis,
        basis1: OrthonormalBasis,
        alpha: Vec<f64>,
        channel: ChannelModel,
        alpha_tilde: Vec<f64>,
        beta_tilde: Vec<f64>,
    ) -> Result<Self> {
        let spec = Self {
            basis0,
            basis1,
            alpha,
            channel,
            alpha_tilde,
            beta_tilde,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.basis0.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.basis0.dim();
        if self.basis1.dim() != n {
            return Err(Error::SpecInvalid(format!(
                "basis dimensions differ: {} vs {}",
                n,
                self.basis1.dim()
            )));
        }
        check_probability("alpha", &self.alpha, n)?;
        check_probability("alpha_tilde", &self.alpha_tilde, n)?;
        check_probability("beta_tilde", &self.beta_tilde, n)?;
        match &self.channel {
            ChannelModel::Single(ch) => {
                if ch.dim() != n {
                    return Err(Error::SpecInvalid(format!(
                        "channel dimension {} != {n}",
                        ch.dim()
                    )));
                }
            }
            ChannelModel::Split(split) => {
                if !(split.tau > 0.0 && split.tau < 1.0) {
                    return Err(Error::SpecInvalid(format!(
                        "tau {} outside (0,1)",
                        split.tau
                    )));
                }
                if !(split.tau_end >= split.tau && split.tau_end < 1.0) {
                    return Err(Error::SpecInvalid(format!(
                        "measurement end {} invalid",
                        split.tau_end
                    )));
                }
                for fam in [&split.pre, &split.post] {
                    fam.validate()
                        .map_err(|e| Error::SpecInvalid(e.to_string()))?;
                    if fam.dim() != n {
                        return Err(Error::SpecInvalid(format!(
                            "segment dimension {} != {n}",
                            fam.dim()
                        )));
                    }
                }
                match &split.intermediate {
                    IntermediateMeasurement::None => {}
                    IntermediateMeasurement::Projective(o) => {
                        if o.dim() != n {
                            return Err(Error::SpecInvalid("observable dimension mismatch".into()));
                        }
                    }
                    IntermediateMeasurement::Weak { observable, delta } => {
                        if observable.dim() != n {
                            return Err(Error::SpecInvalid("observable dimension mismatch".into()));
                        }
                        if !(*delta > 0.0 && delta.is_finite()) {
                            return Err(Error::SpecInvalid(format!(
                                "weak strength {delta} must be positive"
                            )));
                        }
                    }
                    IntermediateMeasurement::Generalized(ops) => {
                        if ops.is_empty() || ops.iter().any(|o| o.nrows() != n || o.ncols() != n) {
                            return Err(Error::SpecInvalid(
                                "generalized family has wrong shape".into(),
                            ));
                        }
                        let defect = completeness_defect(ops);
                        if defect > tolerance::COMPLETENESS {
                            return Err(Error::SpecInvalid(format!(
                                "generalized family is not normalized (defect {defect:.3e})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn split(&self) -> Result<&SplitChannel> {
        match &self.channel {
            ChannelModel::Split(s) => Ok(s),
            ChannelModel::Single(_) => Err(Error::NoSplitChannel),
        }
    }

    /// Same experiment with a weak intermediate replaced by its `δ → 0` limit
    /// (no disturbance); other intermediates are left unchanged.
    pub fn weak_limit(&self) -> Self {
        let mut out = self.clone();
        if let ChannelModel::Split(split) = &mut out.channel {
            if matches!(split.intermediate, IntermediateMeasurement::Weak { .. }) {
                split.intermediate = IntermediateMeasurement::None;
            }
        }
        out
    }

    /// Rebuilds the experiment with the intermediate measurement at a new `τ`.
    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        let mut out = self.clone();
        match &mut out.channel {
            ChannelModel::Split(split) => {
                let width = split.tau_end - split.tau;
                split.tau = tau;
                split.tau_end = tau + width;
            }
            ChannelModel::Single(_) => return Err(Error::NoSplitChannel),
        }
        out.validate()?;
        Ok(out)
    }

    /// Composed operators `L_k(1,0)`. For split channels `k = (l, m, l')` with
    /// `L_k = K_{l'}(1,τ_end) M_m K_l(τ,0)`; products that vanish identically are dropped.
    pub fn composed_operators(&self) -> Result<Vec<LabeledOp>> {
        match &self.channel {
            ChannelModel::Single(ch) => Ok(ch
                .ops()
                .iter()
                .enumerate()
                .map(|(k, op)| LabeledOp {
                    k: vec![k],
                    op: op.clone(),
                })
                .collect()),
            ChannelModel::Split(split) => {
                let pre = split.pre_channel()?;
                let post = split.post_channel()?;
                let mid = split.intermediate.kraus_ops(self.dim());
                let mut out = Vec::new();
                for (l, kl) in pre.ops().iter().enumerate() {
                    for (m, om) in mid.iter().enumerate() {
                        let first = om * kl;
                        if is_zero(&first) {
                            continue;
                        }
                        for (l2, kl2) in post.ops().iter().enumerate() {
                            let op = kl2 * &first;
                            if !is_zero(&op) {
                                out.push(LabeledOp {
                                    k: vec![l, m, l2],
                                    op,
                                });
                            }
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// Prior initial state `ρ_0 = Σ α_i |x_0^i⟩⟨x_0^i|`.
    pub fn rho0(&self) -> Result<DensityMatrix> {
        DensityMatrix::diagonal_in(&self.basis0, &self.alpha)
    }

    /// Observed initial state `ρ̃_0`.
    pub fn rho0_tilde(&self) -> Result<DensityMatrix> {
        DensityMatrix::diagonal_in(&self.basis0, &self.alpha_tilde)
    }

    /// Observed final state `ρ̃_1`.
    pub fn rho1_tilde(&self) -> Result<DensityMatrix> {
        DensityMatrix::diagonal_in(&self.basis1, &self.beta_tilde)
    }
}

fn is_zero(m: &CMat) -> bool {
    m.iter().all(|z| z.re == 0.0 && z.im == 0.0)
}

fn check_probability(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::SpecInvalid(format!(
            "{name} has length {} (expected {n})",
            v.len()
        )));
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite() || **x <= 0.0) {
        return Err(Error::SpecInvalid(format!(
            "{name} has a non-positive entry {x}"
        )));
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > tolerance::PROBABILITY_SUM {
        return Err(Error::SpecInvalid(format!("{name} sums to {sum}")));
    }
    Ok(())
}

/// Born-rule weights `α_i = ⟨x_0^i| ρ_{0^-} |x_0^i⟩` of a pre-measurement state.
pub fn alpha_from_state(basis0: &OrthonormalBasis, rho_before: &DensityMatrix) -> Result<Vec<f64>> {
    if basis0.dim() != rho_before.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis0.dim(),
            got: rho_before.dim(),
        });
    }
    Ok(basis0.diagonal_of(rho_before.matrix()))
}

/// Prior statistics of the experiment.
#[derive(Debug, Clone)]
pub struct PriorModel {
    /// `p_ij`, rows indexed by the initial outcome.
    pub joint: DMatrix<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub rho0: DensityMatrix,
    /// `Σ_ikj L_ikj ρ_0 L_ikj†`, equal to `Σ_j β_j |y_1^j⟩⟨y_1^j|`.
    pub rho1: DensityMatrix,
    pub selected_kraus: Vec<SelectedKraus>,
}

impl PriorModel {
    pub fn selected_ops(&self) -> Vec<CMat> {
        selected_ops(&self.selected_kraus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorOptions {
    /// Adds ε to every `p_ij` and renormalizes. Changes the optimization problem.
    pub epsilon_regularize: Option<f64>,
    pub floor: f64,
}

impl Default for PriorOptions {
    fn default() -> Self {
        Self {
            epsilon_regularize: None,
            floor: tolerance::FLOOR_REL,
        }
    }
}

/// `L_ikj = Π_1^j L_k(1,0) Π_0^i` for every `(i, k, j)`.
pub fn build_selected_kraus(spec: &ExperimentSpec) -> Result<Vec<SelectedKraus>> {
    spec.validate()?;
    let composed = spec.composed_operators()?;
    let n = spec.dim();
    let p0 = spec.basis0.projectors();
    let p1 = spec.basis1.projectors();
    let mut out = Vec::with_capacity(n * n * composed.len());
    for (i, pi) in p0.iter().enumerate() {
        for lk in &composed {
            for (j, pj) in p1.iter().enumerate() {
                out.push(SelectedKraus {
                    i,
                    k: lk.k.clone(),
                    j,
                    op: pj * &lk.op * pi,
                });
            }
        }
    }
    Ok(out)
}

pub fn prior_joint(spec: &ExperimentSpec) -> Result<PriorModel> {
    prior_joint_with(spec, &PriorOptions::default())
}

/// Prior coupling `p_ij = α_i Σ_k |⟨y_1^j| L_k(1,0) |x_0^i⟩|²` with marginals and endpoint states.
pub fn prior_joint_with(spec: &ExperimentSpec, opts: &PriorOptions) -> Result<PriorModel> {
    let selected = build_selected_kraus(spec)?;
    let composed = spec.composed_operators()?;
    let n = spec.dim();
    let mut joint = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let x = spec.basis0.vector(i);
        for j in 0..n {
            let mut acc = 0.0;
            for lk in &composed {
                acc += spec.basis1.amplitude(j, &lk.op, &x).norm_sqr();
            }
            joint[(i, j)] = spec.alpha[i] * acc;
        }
    }
    if let Some(eps) = opts.epsilon_regularize {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "regularization {eps} must be positive"
            )));
        }
        joint.add_scalar_mut(eps);
        let total = joint.sum();
        joint /= total;
    }
    if let Some(((i, j), v)) = joint
        .iter()
        .enumerate()
        .map(|(idx, v)| ((idx % n, idx / n), *v))
        .find(|(_, v)| *v <= opts.floor)
    {
        return Err(Error::PriorDegenerate(format!(
            "p[{i}][{j}] = {v:.3e} is not strictly positive"
        )));
    }
    let alpha: Vec<f64> = (0..n).map(|i| joint.row(i).sum()).collect();
    let beta: Vec<f64> = (0..n).map(|j| joint.column(j).sum()).collect();
    let rho0 = DensityMatrix::diagonal_in(&spec.basis0, &alpha)?;
    let rho1 = DensityMatrix::from_trusted(apply_kraus(&selected_ops(&selected), rho0.matrix()));
    Ok(PriorModel {
        joint,
        alpha,
        beta,
        rho0,
        rho1,
        selected_kraus: selected,
    })
}

/// Prior state at time `t` and, at `t = τ` for a projective intermediate,
/// the prior outcome probabilities `P_τ(z)`.
#[derive(Debug, Clone)]
pub struct PriorIntermediate {
    pub t: f64,
    pub state: DensityMatrix,
    pub outcome_probs: Option<Vec<f64>>,
}

pub fn prior_intermediate_state(spec: &ExperimentSpec, t: f64) -> Result<PriorIntermediate> {
    let split = spec.split()?;
    let rho0 = spec.rho0()?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!("time {t} outside [0,1]")));
    }
    if t <= split.tau {
        let state = apply_channel(&split.pre.channel(0.0, t)?, &rho0)?;
        let outcome_probs = match (&split.intermediate, t == split.tau) {
            (IntermediateMeasurement::Projective(obs), true) => {
                let probs = obs.basis().diagonal_of(state.matrix());
                if let Some((z, p)) = probs
                    .iter()
                    .enumerate()
                    .find(|(_, p)| **p <= tolerance::FLOOR_REL)
                {
                    return Err(Error::PriorDegenerate(format!(
                        "P_tau({z}) = {p:.3e} is not strictly positive"
                    )));
                }
                Some(probs)
            }
            _ => None,
        };
        return Ok(PriorIntermediate {
            t,
            state,
            outcome_probs,
        });
    }
    if t < split.tau_end {
        return Err(Error::InvalidParameter(format!(
            "time {t} falls inside the measurement window [{}, {}]",
            split.tau, split.tau_end
        )));
    }
    let at_tau = apply_channel(&split.pre_channel()?, &rho0)?;
    let measured = DensityMatrix::from_trusted(apply_kraus(
        &split.intermediate.kraus_ops(spec.dim()),
        at_tau.matrix(),
    ));
    let state = apply_channel(&split.post.channel(split.tau_end, t)?, &measured)?;
    Ok(PriorIntermediate {
        t,
        state,
        outcome_probs: None,
    })
}

/// Prior anchor states `(ρ_0, ρ_{τ1}, ρ_{τ2}, ρ_1)` around the intermediate measurement:
/// before the measurement, after it (non-selective), and the projected final state.
#[derive(Debug, Clone)]
pub struct AnchorStates {
    pub rho0: DensityMatrix,
    pub before: DensityMatrix,
    pub after: DensityMatrix,
    pub rho1: DensityMatrix,
}

pub fn anchor_states(spec: &ExperimentSpec, prior: &PriorModel) -> Result<AnchorStates> {
    let split = spec.split()?;
    let before = apply_channel(&split.pre_channel()?, &prior.rho0)?;
    let after = DensityMatrix::from_trusted(apply_kraus(
        &split.intermediate.kraus_ops(spec.dim()),
        before.matrix(),
    ));
    Ok(AnchorStates {
        rho0: prior.rho0.clone(),
        before,
        after,
        rho1: prior.rho1.clone(),
    })
}

/// The amplitude damping experiment: prepare `diag_x(2/3, 1/3)`, decay with
/// `λ(t) = 1 − e^{−γt}`, measure σ_z at `τ`, and observe `diag_z(3/4, 1/4)` at the end.
pub fn amplitude_damping_example(gamma: f64, tau: f64) -> Result<ExperimentSpec> {
    amplitude_damping_with(
        gamma,
        tau,
        IntermediateMeasurement::Projective(Observable::pauli_z()),
    )
}

/// Same experiment with a weak σ_z measurement of strength `δ` at `τ`.
pub fn amplitude_damping_weak_example(gamma: f64, tau: f64, delta: f64) -> Result<ExperimentSpec> {
    amplitude_damping_with(
        gamma,
        tau,
        IntermediateMeasurement::Weak {
            observable: Observable::pauli_z(),
            delta,
        },
    )
}

pub fn amplitude_damping_with(
    gamma: f64,
    tau: f64,
    intermediate: IntermediateMeasurement,
) -> Result<ExperimentSpec> {
    let family = ChannelFamily::AmplitudeDamping { gamma };
    let split = SplitChannel::new(family.clone(), intermediate, family, tau);
    ExperimentSpec::new(
        OrthonormalBasis::qubit_x(),
        OrthonormalBasis::computational(2),
        vec![2.0 / 3.0, 1.0 / 3.0],
        ChannelModel::Split(split),
        vec![2.0 / 3.0, 1.0 / 3.0],
        vec![0.75, 0.25],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::map_distance;

    fn identity_spec(alpha: Vec<f64>) -> ExperimentSpec {
        ExperimentSpec::new(
            OrthonormalBasis::computational(2),
            OrthonormalBasis::computational(2),
            alpha.clone(),
            ChannelModel::Single(KrausChannel::identity(2)),
            alpha.clone(),
            alpha,
        )
        .unwrap()
    }

    #[test]
    fn identity_selected_kraus_is_diagonal() {
        let spec = identity_spec(vec![0.5, 0.5]);
        let sel = build_selected_kraus(&spec).unwrap();
        assert_eq!(sel.len(), 4);
        for s in &sel {
            if s.i == s.j {
                assert!((s.op.clone() - spec.basis0.projector(s.i)).norm() < 1e-15);
            } else {
                assert_eq!(s.op.norm(), 0.0);
            }
        }
    }

    #[test]
    fn identity_prior_is_degenerate() {
        let spec = identity_spec(vec![0.5, 0.5]);
        assert!(matches!(prior_joint(&spec), Err(Error::PriorDegenerate(_))));
    }

    #[test]
    fn regularization_is_opt_in() {
        let spec = identity_spec(vec![0.5, 0.5]);
        let opts = PriorOptions {
            epsilon_regularize: Some(1e-3),
            ..PriorOptions::default()
        };
        let prior = prior_joint_with(&spec, &opts).unwrap();
        assert!((prior.joint.sum() - 1.0).abs() < 1e-15);
        assert!(prior.joint[(0, 1)] > 0.0);
    }

    #[test]
    fn amplitude_damping_selected_family_has_sixteen_members() {
        let spec = amplitude_damping_example(1.5, 0.5).unwrap();
        let sel = build_selected_kraus(&spec).unwrap();
        assert_eq!(spec.composed_operators().unwrap().len(), 4);
        assert_eq!(sel.len(), 2 * 4 * 2);
        assert!(completeness_defect(&selected_ops(&sel)) < 1e-12);
    }

    #[test]
    fn amplitude_damping_prior_by_hand() {
        // ρ_0 = I/2 + σ_x/6 in the z basis. The σ_z measurement at τ does not change
        // populations, so p_ij follows from the full-interval decay λ(1).
        let gamma = 1.5f64;
        let spec = amplitude_damping_example(gamma, 0.5).unwrap();
        let prior = prior_joint(&spec).unwrap();
        let lam = 1.0 - (-gamma).exp();
        // |x_i⟩ has populations (1/2, 1/2); after decay P(z=1) = (1−λ)/2.
        let expected = |a: f64| [a * (1.0 - (1.0 - lam) / 2.0), a * (1.0 - lam) / 2.0];
        let row0 = expected(2.0 / 3.0);
        let row1 = expected(1.0 / 3.0);
        for j in 0..2 {
            assert!((prior.joint[(0, j)] - row0[j]).abs() < 1e-15);
            assert!((prior.joint[(1, j)] - row1[j]).abs() < 1e-15);
        }
        assert!((prior.beta[1] - (1.0 - lam) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn depolarizing_prior_is_uniform() {
        let spec = ExperimentSpec::new(
            OrthonormalBasis::qubit_x(),
            OrthonormalBasis::computational(2),
            vec![0.5, 0.5],
            ChannelModel::Single(KrausChannel::depolarizing(2, 1.0).unwrap()),
            vec![0.5, 0.5],
            vec![0.5, 0.5],
        )
        .unwrap();
        let prior = prior_joint(&spec).unwrap();
        assert!(prior.joint.iter().all(|p| (p - 0.25).abs() < 1e-15));
    }

    #[test]
    fn prior_intermediate_at_zero_is_rho0() {
        let spec = amplitude_damping_example(1.5, 0.5).unwrap();
        let st = prior_intermediate_state(&spec, 0.0).unwrap();
        assert!((st.state.matrix() - spec.rho0().unwrap().matrix()).norm() < 1e-15);
    }

    #[test]
    fn prior_intermediate_probs_at_tau() {
        let gamma = 1.5f64;
        let tau = 0.5;
        let spec = amplitude_damping_example(gamma, tau).unwrap();
        let st = prior_intermediate_state(&spec, tau).unwrap();
        let probs = st.outcome_probs.unwrap();
        let p1 = 0.5 * (-gamma * tau).exp();
        assert!((probs[1] - p1).abs() < 1e-15);
        assert!((probs[0] - (1.0 - p1)).abs() < 1e-15);
    }

    #[test]
    fn prior_state_after_measurement() {
        let spec = amplitude_damping_example(1.5, 0.5).unwrap();
        let st = prior_intermediate_state(&spec, 1.0).unwrap();
        let prior = prior_joint(&spec).unwrap();
        // The final prior state, dephased in z, matches ρ_1.
        let diag = spec.basis1.diagonal_of(st.state.matrix());
        assert!((diag[0] - prior.beta[0]).abs() < 1e-15);
    }

    #[test]
    fn no_split_channel_error() {
        let spec = identity_spec(vec![0.5, 0.5]);
        assert!(matches!(
            prior_intermediate_state(&spec, 0.3),
            Err(Error::NoSplitChannel)
        ));
    }

    #[test]
    fn weak_dephasing_map_is_exact() {
        let obs = Observable::pauli_z();
        let delta = 0.7;
        let ops = IntermediateMeasurement::Weak {
            observable: obs.clone(),
            delta,
        }
        .kraus_ops(2);
        assert!(completeness_defect(&ops) < 1e-14);
        let rho = CMat::from_row_slice(
            2,
            2,
            &[c64(0.5, 0.0), c64(0.3, 0.1), c64(0.3, -0.1), c64(0.5, 0.0)],
        );
        let out = apply_kraus(&ops, &rho);
        let damp = (-delta * 4.0 / 8.0).exp();
        assert!((out[(0, 1)] - rho[(0, 1)] * damp).norm() < 1e-15);
        assert!((out[(0, 0)] - rho[(0, 0)]).norm() < 1e-15);
    }

    #[test]
    fn invalid_marginals_rejected() {
        let r = ExperimentSpec::new(
            OrthonormalBasis::computational(2),
            OrthonormalBasis::computational(2),
            vec![0.5, 0.5],
            ChannelModel::Single(KrausChannel::identity(2)),
            vec![1.0, 0.0],
            vec![0.5, 0.5],
        );
        assert!(matches!(r, Err(Error::SpecInvalid(_))));
    }

    #[test]
    fn alpha_from_pure_state() {
        let b = OrthonormalBasis::qubit_x();
        let rho =
            DensityMatrix::diagonal_in(&OrthonormalBasis::computational(2), &[1.0, 0.0]).unwrap();
        let alpha = alpha_from_state(&b, &rho).unwrap();
        assert!((alpha[0] - 0.5).abs() < 1e-15 && (alpha[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn selected_family_equals_project_evolve_project() {
        let spec = amplitude_damping_example(1.5, 0.3).unwrap();
        let sel = build_selected_kraus(&spec).unwrap();
        let split = spec.split().unwrap();
        // Project, decay to τ, project on z, decay to 1, project.
        let mut direct = Vec::new();
        let pre = split.pre_channel().unwrap();
        let post = split.post_channel().unwrap();
        for pi in spec.basis0.projectors() {
            for kl in pre.ops() {
                for pz in spec.basis1.projectors() {
                    for kl2 in post.ops() {
                        for pj in spec.basis1.projectors() {
                            direct.push(&pj * kl2 * &pz * kl * &pi);
                        }
                    }
                }
            }
        }
        assert!(map_distance(&selected_ops(&sel), &direct, 2) < 1e-12);
    }
}
