//! Classical one-step Schrödinger bridge and the quantum channel it induces.
//!
//! The most likely coupling consistent with observed marginals has the scaled
//! form `p̃_ij = (b_j / a_i)(α̃_i / α_i) p_ij`. The potentials `(a, b)` become the
//! diagonal operators `φ_0 = Σ a_i Π_0^i` and `φ_1 = Σ b_j Π_1^j`, and
//! `L̃ = φ_1^{1/2} L φ_0^{-1/2}` bridges `ρ̃_0` to `ρ̃_1`.

use nalgebra::DMatrix;

use crate::check::{self, Check};
use crate::error::{Error, Result};
use crate::experiment::{selected_ops, ExperimentSpec, PriorModel, SelectedKraus};
use crate::qcore::{
    adjoint_kraus, apply_kraus, completeness_defect, distance, CMat, DensityMatrix,
    PositiveDiagonalOperator,
};
use crate::tolerance::{self, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornOptions {
    /// Bound on `‖rows − α̃‖_∞ + ‖cols − β̃‖_∞`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        Self {
            tol: tolerance::SINKHORN_TOL,
            max_iter: tolerance::SINKHORN_MAX_ITER,
        }
    }
}

/// Joint distribution of endpoint outcomes, rows indexed by the initial outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling(pub DMatrix<f64>);

impl Coupling {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidParameter(
                "coupling entries must be finite and nonnegative".into(),
            ));
        }
        let total = m.sum();
        if (total - 1.0).abs() > tolerance::PROBABILITY_SUM * 10.0 {
            return Err(Error::InvalidParameter(format!("coupling sums to {total}")));
        }
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn row_sums(&self) -> Vec<f64> {
        row_sums(&self.0)
    }

    pub fn col_sums(&self) -> Vec<f64> {
        col_sums(&self.0)
    }
}

/// Scaling potentials in the gauge `Σ_j b_j = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPotentials {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ScalingPotentials {
    /// Multiplies both potentials by `c`, which leaves the coupling unchanged.
    pub fn rescaled(&self, c: f64) -> Self {
        Self {
            a: self.a.iter().map(|x| x * c).collect(),
            b: self.b.iter().map(|x| x * c).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CouplingSolve {
    pub coupling: Coupling,
    pub potentials: ScalingPotentials,
    pub iterations: usize,
    /// Marginal residual after every sweep.
    pub residual_history: Vec<f64>,
    pub residual: f64,
}

pub(crate) fn row_sums(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).map(|i| m.row(i).sum()).collect()
}

pub(crate) fn col_sums(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.ncols()).map(|j| m.column(j).sum()).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `‖rows − α̃‖_∞ + ‖cols − β̃‖_∞`
pub fn marginal_residual(q: &DMatrix<f64>, alpha_tilde: &[f64], beta_tilde: &[f64]) -> f64 {
    max_abs_diff(&row_sums(q), alpha_tilde) + max_abs_diff(&col_sums(q), beta_tilde)
}

/// `Σ_ij |rows − α̃| + |cols − β̃|`, the quantity Sinkhorn provably never increases.
pub fn marginal_residual_l1(q: &DMatrix<f64>, alpha_tilde: &[f64], beta_tilde: &[f64]) -> f64 {
    let r: f64 = row_sums(q)
        .iter()
        .zip(alpha_tilde)
        .map(|(x, y)| (x - y).abs())
        .sum();
    let c: f64 = col_sums(q)
        .iter()
        .zip(beta_tilde)
        .map(|(x, y)| (x - y).abs())
        .sum();
    r + c
}

fn scaled_coupling(
    p: &DMatrix<f64>,
    alpha: &[f64],
    alpha_tilde: &[f64],
    a: &[f64],
    b: &[f64],
) -> DMatrix<f64> {
    DMatrix::from_fn(p.nrows(), p.ncols(), |i, j| {
        (b[j] / a[i]) * (alpha_tilde[i] / alpha[i]) * p[(i, j)]
    })
}

fn check_marginal(name: &str, v: &[f64], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            got: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "{name} must be strictly positive"
        )));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > tolerance::PROBABILITY_SUM {
        return Err(Error::InvalidParameter(format!("{name} sums to {s}")));
    }
    Ok(())
}

/// Relative-entropy projection of `p` onto couplings with marginals `(α̃, β̃)`.
///
/// Starting from `b ≡ 1`, each sweep sets `a_i = Σ_j b_j p_ij / α_i` and then
/// `b_j = β̃_j / Σ_i (α̃_i / (a_i α_i)) p_ij`. After convergence one more `a`
/// update makes the row marginals exact, and the gauge `Σ_j b_j = 1` is applied.
pub fn solve_coupling(
    p: &DMatrix<f64>,
    alpha_tilde: &[f64],
    beta_tilde: &[f64],
    opts: &SinkhornOptions,
) -> Result<CouplingSolve> {
    let (n, m) = p.shape();
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("empty prior coupling".into()));
    }
    if let Some(idx) = p
        .iter()
        .position(|x| !x.is_finite() || *x <= tolerance::FLOOR_REL)
    {
        return Err(Error::PriorDegenerate(format!(
            "p[{}][{}] = {:.3e} is not strictly positive",
            idx % n,
            idx / n,
            p[idx]
        )));
    }
    check_marginal("alpha_tilde", alpha_tilde, n)?;
    check_marginal("beta_tilde", beta_tilde, m)?;
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.max_iter == 0 {
        return Err(Error::InvalidParameter(
            "tolerance and iteration limit must be positive".into(),
        ));
    }
    let alpha = row_sums(p);
    let update_a = |b: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..m).map(|j| b[j] * p[(i, j)]).sum::<f64>() / alpha[i])
            .collect()
    };
    let mut b = vec![1.0; m];
    let mut a = vec![1.0; n];
    let mut history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        a = update_a(&b);
        for (j, bj) in b.iter_mut().enumerate() {
            let denom: f64 = (0..n)
                .map(|i| alpha_tilde[i] / (a[i] * alpha[i]) * p[(i, j)])
                .sum();
            *bj = beta_tilde[j] / denom;
        }
        let q = scaled_coupling(p, &alpha, alpha_tilde, &a, &b);
        residual = marginal_residual(&q, alpha_tilde, beta_tilde);
        history.push(residual);
        if residual <= opts.tol {
            break;
        }
    }
    if residual > opts.tol {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    a = update_a(&b);
    let gauge: f64 = b.iter().sum();
    a.iter_mut().for_each(|x| *x /= gauge);
    b.iter_mut().for_each(|x| *x /= gauge);
    let q = scaled_coupling(p, &alpha, alpha_tilde, &a, &b);
    let residual = marginal_residual(&q, alpha_tilde, beta_tilde);
    Ok(CouplingSolve {
        coupling: Coupling(q),
        potentials: ScalingPotentials { a, b },
        iterations,
        residual_history: history,
        residual,
    })
}

/// Relative entropy `Σ_ij q_ij log(q_ij / p_ij)` with `0 log 0 = 0`.
pub fn rate_function(q: &DMatrix<f64>, p: &DMatrix<f64>) -> Result<f64> {
    if q.shape() != p.shape() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let n = q.nrows();
    let mut acc = 0.0;
    for (idx, (&qi, &pi)) in q.iter().zip(p.iter()).enumerate() {
        if qi < 0.0 || pi < 0.0 || !qi.is_finite() || !pi.is_finite() {
            return Err(Error::InvalidParameter(
                "distributions must be finite and nonnegative".into(),
            ));
        }
        if qi == 0.0 {
            continue;
        }
        if pi == 0.0 {
            return Err(Error::SupportViolation {
                row: idx % n,
                col: idx / n,
            });
        }
        acc += qi * (qi / pi).ln();
    }
    Ok(acc.max(0.0))
}

/// `φ_0, φ_1, φ̂_0, φ̂_1` with the residuals of the identities linking them.
#[derive(Debug, Clone)]
pub struct SchrodingerSystem {
    pub phi0: PositiveDiagonalOperator,
    pub phi1: PositiveDiagonalOperator,
    pub phihat0: CMat,
    pub phihat1: CMat,
    pub checks: Vec<Check>,
}

/// Builds the Schrödinger system and verifies `φ_0 = Σ L† φ_1 L` and
/// `φ̂_1 = Σ L φ̂_0 L†` over the selected family.
pub fn schrodinger_system(
    spec: &ExperimentSpec,
    prior: &PriorModel,
    pot: &ScalingPotentials,
    tol: &Tolerances,
) -> Result<SchrodingerSystem> {
    let phi0 = PositiveDiagonalOperator::new(spec.basis0.clone(), pot.a.clone())?;
    let phi1 = PositiveDiagonalOperator::new(spec.basis1.clone(), pot.b.clone())?;
    let hat0: Vec<f64> = spec
        .alpha_tilde
        .iter()
        .zip(&pot.a)
        .map(|(t, a)| t / a)
        .collect();
    let hat1: Vec<f64> = spec
        .beta_tilde
        .iter()
        .zip(&pot.b)
        .map(|(t, b)| t / b)
        .collect();
    let phihat0 = spec.basis0.diagonal(&hat0);
    let phihat1 = spec.basis1.diagonal(&hat1);
    let ops = prior.selected_ops();
    let adjoint = adjoint_kraus(&ops, &phi1.matrix());
    let forward = apply_kraus(&ops, &phihat0);
    let checks = vec![
        Check::new(
            "adjoint_potential",
            distance(&adjoint, &phi0.matrix()),
            tol.system,
        ),
        Check::new(
            "forward_potential",
            distance(&forward, &phihat1),
            tol.system,
        ),
        Check::new(
            "potential_trace",
            (phihat0.trace() - phihat1.trace()).norm(),
            tol.system,
        ),
    ];
    Ok(SchrodingerSystem {
        phi0,
        phi1,
        phihat0,
        phihat1,
        checks,
    })
}

/// `L̃_ikj = φ_1^{1/2} L_ikj φ_0^{-1/2}`, keeping the index tuples.
pub fn updated_channel(
    prior: &PriorModel,
    phi0: &PositiveDiagonalOperator,
    phi1: &PositiveDiagonalOperator,
) -> Result<Vec<SelectedKraus>> {
    ensure_above_floor(phi0)?;
    let left = phi1.sqrt();
    let right = phi0.inv_sqrt();
    Ok(prior
        .selected_kraus
        .iter()
        .map(|s| SelectedKraus {
            op: &left * &s.op * &right,
            ..s.clone()
        })
        .collect())
}

pub(crate) fn ensure_above_floor(op: &PositiveDiagonalOperator) -> Result<()> {
    let max = op.weights().iter().fold(0.0f64, |m, w| m.max(*w));
    let min = op.weights().iter().fold(f64::INFINITY, |m, w| m.min(*w));
    let floor = tolerance::FLOOR_REL * max;
    if min <= floor {
        return Err(Error::SingularBelowFloor {
            min_eigenvalue: min,
            floor,
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct BridgeSolution {
    pub coupling: Coupling,
    pub potentials: ScalingPotentials,
    pub phi0: PositiveDiagonalOperator,
    pub phi1: PositiveDiagonalOperator,
    pub phihat0: CMat,
    pub phihat1: CMat,
    pub updated_kraus: Vec<SelectedKraus>,
    /// `KL(p̃* ‖ p)`.
    pub kl_value: f64,
    pub rho0_tilde: DensityMatrix,
    pub rho1_tilde: DensityMatrix,
    /// The prior coupling the bridge was solved against.
    pub prior_joint: DMatrix<f64>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub checks: Vec<Check>,
}

impl BridgeSolution {
    pub fn updated_ops(&self) -> Vec<CMat> {
        selected_ops(&self.updated_kraus)
    }
}

pub fn solve_bridge(
    spec: &ExperimentSpec,
    prior: &PriorModel,
    opts: &SinkhornOptions,
) -> Result<BridgeSolution> {
    solve_bridge_with(spec, prior, opts, &Tolerances::default())
}

/// Solves the coupling, builds the Schrödinger system and the updated channel, and
/// verifies completeness, bridging and the factored endpoint states.
///
/// Returns `ConsistencyViolation` carrying every check if any of them fails.
pub fn solve_bridge_with(
    spec: &ExperimentSpec,
    prior: &PriorModel,
    opts: &SinkhornOptions,
    tol: &Tolerances,
) -> Result<BridgeSolution> {
    let solve = solve_coupling(&prior.joint, &spec.alpha_tilde, &spec.beta_tilde, opts)?;
    let system = schrodinger_system(spec, prior, &solve.potentials, tol)?;
    let updated = updated_channel(prior, &system.phi0, &system.phi1)?;
    let ops = selected_ops(&updated);
    let rho0_tilde = spec.rho0_tilde()?;
    let rho1_tilde = spec.rho1_tilde()?;
    let kl_value = rate_function(solve.coupling.matrix(), &prior.joint)?;

    let mut checks = vec![Check::new(
        "marginals",
        solve.residual,
        opts.tol.max(tolerance::PROBABILITY_SUM),
    )];
    checks.extend(system.checks.iter().cloned());
    checks.push(Check::new(
        "completeness",
        completeness_defect(&ops),
        tol.completeness,
    ));
    checks.push(Check::new(
        "bridging",
        distance(&apply_kraus(&ops, rho0_tilde.matrix()), rho1_tilde.matrix()),
        tol.bridging,
    ));
    let factored0 = system.phi0.sqrt() * &system.phihat0 * system.phi0.sqrt();
    let factored1 = system.phi1.sqrt() * &system.phihat1 * system.phi1.sqrt();
    checks.push(Check::new(
        "factored_rho0",
        distance(&factored0, rho0_tilde.matrix()),
        tol.system,
    ));
    checks.push(Check::new(
        "factored_rho1",
        distance(&factored1, rho1_tilde.matrix()),
        tol.system,
    ));
    let checks = check::ensure(checks)?;

    Ok(BridgeSolution {
        coupling: solve.coupling,
        potentials: solve.potentials,
        phi0: system.phi0,
        phi1: system.phi1,
        phihat0: system.phihat0,
        phihat1: system.phihat1,
        updated_kraus: updated,
        kl_value,
        rho0_tilde,
        rho1_tilde,
        prior_joint: prior.joint.clone(),
        iterations: solve.iterations,
        residual_history: solve.residual_history,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::{amplitude_damping_example, prior_joint};
    use crate::qcore::map_distance;
    use proptest::prelude::*;

    fn mat(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j])
    }

    fn kl_2x2(x: f64, p: &DMatrix<f64>, at: &[f64], bt: &[f64]) -> f64 {
        let q = mat(&[&[x, at[0] - x], &[bt[0] - x, x + at[1] - bt[0]]]);
        q.iter()
            .zip(p.iter())
            .map(|(q, p)| if *q > 0.0 { q * (q / p).ln() } else { 0.0 })
            .sum()
    }

    /// Dense scan of the one-parameter feasible family followed by golden-section refinement.
    fn grid_oracle(p: &DMatrix<f64>, at: &[f64], bt: &[f64]) -> (f64, f64) {
        let lo = (bt[0] - at[1]).max(0.0);
        let hi = at[0].min(bt[0]);
        let steps = 20_000;
        let h = (hi - lo) / steps as f64;
        let mut best = (lo + h, f64::INFINITY);
        for s in 1..steps {
            let x = lo + s as f64 * h;
            let v = kl_2x2(x, p, at, bt);
            if v < best.1 {
                best = (x, v);
            }
        }
        let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if kl_2x2(c, p, at, bt) < kl_2x2(d, p, at, bt) {
                b = d;
            } else {
                a = c;
            }
        }
        let x = 0.5 * (a + b);
        (x, kl_2x2(x, p, at, bt))
    }

    #[test]
    fn prior_marginals_return_prior() {
        let p = mat(&[&[0.4, 0.1], &[0.2, 0.3]]);
        let solve =
            solve_coupling(&p, &[0.5, 0.5], &[0.6, 0.4], &SinkhornOptions::default()).unwrap();
        assert!((solve.coupling.matrix() - &p).abs().max() < 1e-15);
        assert!(rate_function(solve.coupling.matrix(), &p).unwrap() < 1e-15);
    }

    #[test]
    fn two_by_two_matches_grid_oracle() {
        let p = mat(&[&[0.4, 0.1], &[0.2, 0.3]]);
        let at = [0.6, 0.4];
        let bt = [0.5, 0.5];
        let solve = solve_coupling(&p, &at, &bt, &SinkhornOptions::default()).unwrap();
        let (x, kl) = grid_oracle(&p, &at, &bt);
        assert!((solve.coupling.matrix()[(0, 0)] - x).abs() < 1e-6);
        let ours = rate_function(solve.coupling.matrix(), &p).unwrap();
        assert!((ours - kl).abs() < 1e-8, "{ours} vs {kl}");
        assert!(ours <= kl + 1e-15);
    }

    #[test]
    fn uniform_prior_gives_product_coupling() {
        let p = DMatrix::from_element(2, 2, 0.25);
        let at = [0.7, 0.3];
        let bt = [0.4, 0.6];
        let solve = solve_coupling(&p, &at, &bt, &SinkhornOptions::default()).unwrap();
        for (i, a) in at.iter().enumerate() {
            for (j, b) in bt.iter().enumerate() {
                assert!((solve.coupling.matrix()[(i, j)] - a * b).abs() < 1e-10);
            }
        }
        let (_, kl) = grid_oracle(&p, &at, &bt);
        assert!((rate_function(solve.coupling.matrix(), &p).unwrap() - kl).abs() < 1e-8);
    }

    #[test]
    fn rate_function_closed_forms() {
        let p = DMatrix::from_element(2, 2, 0.25);
        let q = mat(&[&[0.5, 0.0], &[0.0, 0.5]]);
        assert!((rate_function(&q, &p).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(rate_function(&p, &p).unwrap(), 0.0);
        let prod = mat(&[&[0.28, 0.42], &[0.12, 0.18]]);
        let direct: f64 = prod.iter().map(|x| x * (x / 0.25).ln()).sum();
        assert!((rate_function(&prod, &p).unwrap() - direct).abs() < 1e-15);
        // For a uniform reference the deficit is log 4 minus the two marginal entropies.
        let h = |v: &[f64]| -v.iter().map(|x| x * x.ln()).sum::<f64>();
        assert!((direct - (4f64.ln() - h(&[0.7, 0.3]) - h(&[0.4, 0.6]))).abs() < 1e-14);
    }

    #[test]
    fn support_violation() {
        let p = mat(&[&[0.5, 0.0], &[0.0, 0.5]]);
        let q = DMatrix::from_element(2, 2, 0.25);
        assert!(matches!(
            rate_function(&q, &p),
            Err(Error::SupportViolation { row: 1, col: 0 })
        ));
    }

    #[test]
    fn degenerate_prior_rejected() {
        let p = mat(&[&[0.5, 0.0], &[0.0, 0.5]]);
        assert!(matches!(
            solve_coupling(&p, &[0.5, 0.5], &[0.5, 0.5], &SinkhornOptions::default()),
            Err(Error::PriorDegenerate(_))
        ));
    }

    #[test]
    fn iteration_limit_reported() {
        let p = mat(&[&[0.4, 0.1], &[0.2, 0.3]]);
        let opts = SinkhornOptions {
            tol: 1e-15,
            max_iter: 2,
        };
        assert!(matches!(
            solve_coupling(&p, &[0.9, 0.1], &[0.2, 0.8], &opts),
            Err(Error::NoConvergence { iterations: 2, .. })
        ));
    }

    #[test]
    fn trivial_marginals_have_constant_potentials() {
        let p = mat(&[&[0.4, 0.1], &[0.2, 0.3]]);
        let solve =
            solve_coupling(&p, &[0.5, 0.5], &[0.6, 0.4], &SinkhornOptions::default()).unwrap();
        for v in solve.potentials.a.iter().chain(&solve.potentials.b) {
            assert!((v - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn amplitude_damping_bridge() {
        let spec = amplitude_damping_example(1.5, 0.5).unwrap();
        let prior = prior_joint(&spec).unwrap();
        let sol = solve_bridge(&spec, &prior, &SinkhornOptions::default()).unwrap();
        assert!(check::all_passed(&sol.checks));
        let out = apply_kraus(&sol.updated_ops(), sol.rho0_tilde.matrix());
        assert!(distance(&out, &spec.basis1.diagonal(&[0.75, 0.25])) < 1e-9);
        assert!((sol.potentials.b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gauge_does_not_change_the_map() {
        let spec = amplitude_damping_example(1.5, 0.4).unwrap();
        let prior = prior_joint(&spec).unwrap();
        let sol = solve_bridge(&spec, &prior, &SinkhornOptions::default()).unwrap();
        let pot = sol.potentials.rescaled(3.7);
        let sys = schrodinger_system(&spec, &prior, &pot, &Tolerances::default()).unwrap();
        let other = updated_channel(&prior, &sys.phi0, &sys.phi1).unwrap();
        assert!(map_distance(&selected_ops(&other), &sol.updated_ops(), 2) < 1e-10);
    }

    proptest! {
        #[test]
        fn random_2x2_instances_match_oracle(
            w in proptest::collection::vec(0.05f64..1.0, 4),
            at0 in 0.1f64..0.9,
            bt0 in 0.1f64..0.9,
        ) {
            let total: f64 = w.iter().sum();
            let p = DMatrix::from_fn(2, 2, |i, j| w[2 * i + j] / total);
            let at = [at0, 1.0 - at0];
            let bt = [bt0, 1.0 - bt0];
            let solve = solve_coupling(&p, &at, &bt, &SinkhornOptions::default()).unwrap();
            let (_, kl) = grid_oracle(&p, &at, &bt);
            let ours = rate_function(solve.coupling.matrix(), &p).unwrap();
            prop_assert!((ours - kl).abs() < 1e-8);
            prop_assert!(solve.coupling.matrix().iter().all(|x| *x > 0.0));
        }

        #[test]
        fn residual_never_increases(
            w in proptest::collection::vec(0.05f64..1.0, 9),
            t in proptest::collection::vec(0.1f64..1.0, 6),
        ) {
            let total: f64 = w.iter().sum();
            let p = DMatrix::from_fn(3, 3, |i, j| w[3 * i + j] / total);
            let sa: f64 = t[..3].iter().sum();
            let sb: f64 = t[3..].iter().sum();
            let at: Vec<f64> = t[..3].iter().map(|x| x / sa).collect();
            let bt: Vec<f64> = t[3..].iter().map(|x| x / sb).collect();
            let solve = solve_coupling(&p, &at, &bt, &SinkhornOptions::default()).unwrap();
            for w in solve.residual_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-14);
            }
        }
    }
}
