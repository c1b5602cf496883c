//! Exact enumeration over the lattice points of the transportation polytope.

use nalgebra::DMatrix;
use statrs::function::gamma::ln_gamma;

use crate::bridge::{rate_function, solve_coupling, SinkhornOptions};
use crate::error::{Error, Result};

/// Largest number of tables an enumeration is allowed to visit.
const MAX_TABLES: f64 = 5e7;

/// `log( N! / Π k_ij! · Π p_ij^{k_ij} )`
pub fn multinomial_log_prob(counts: &DMatrix<u64>, p: &DMatrix<f64>) -> f64 {
    let n: u64 = counts.sum();
    let mut acc = ln_gamma(n as f64 + 1.0);
    for (&k, &pk) in counts.iter().zip(p.iter()) {
        if k > 0 {
            acc += k as f64 * pk.ln() - ln_gamma(k as f64 + 1.0);
        }
    }
    acc
}

fn integral_targets(v: &[f64], n_trials: u64) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(v.len());
    for x in v {
        let t = x * n_trials as f64;
        let r = t.round();
        if (t - r).abs() > 1e-9 * (n_trials.max(1) as f64) || r < 0.0 {
            return Err(Error::InfeasibleMarginals { n: n_trials });
        }
        out.push(r as u64);
    }
    if out.iter().sum::<u64>() != n_trials {
        return Err(Error::InfeasibleMarginals { n: n_trials });
    }
    Ok(out)
}

/// Visits every nonnegative integer table with the given row and column sums.
fn for_each_table(rows: &[u64], cols: &[u64], mut visit: impl FnMut(&DMatrix<u64>)) {
    let (n, m) = (rows.len(), cols.len());
    let mut table = DMatrix::<u64>::zeros(n, m);
    let mut remaining = cols.to_vec();
    fill(0, 0, rows, &mut remaining, &mut table, rows[0], &mut visit);

    fn fill(
        i: usize,
        j: usize,
        rows: &[u64],
        remaining: &mut [u64],
        table: &mut DMatrix<u64>,
        row_left: u64,
        visit: &mut impl FnMut(&DMatrix<u64>),
    ) {
        let (n, m) = table.shape();
        if i == n - 1 {
            // The last row is fixed by the column sums.
            for (jj, r) in remaining.iter().enumerate() {
                table[(i, jj)] = *r;
            }
            visit(table);
            return;
        }
        if j == m - 1 {
            if row_left > remaining[j] {
                return;
            }
            table[(i, j)] = row_left;
            remaining[j] -= row_left;
            fill(i + 1, 0, rows, remaining, table, rows[i + 1], visit);
            remaining[j] += row_left;
            return;
        }
        // Cells still to fill in this row must be able to absorb what is left.
        let capacity_after: u64 = remaining[j + 1..].iter().sum();
        let lo = row_left.saturating_sub(capacity_after);
        let hi = row_left.min(remaining[j]);
        for k in lo..=hi {
            table[(i, j)] = k;
            remaining[j] -= k;
            fill(i, j + 1, rows, remaining, table, row_left - k, visit);
            remaining[j] += k;
        }
    }
}

fn check_size(rows: &[u64], cols: &[u64], n_trials: u64) -> Result<()> {
    if rows.len() > 3 || cols.len() > 3 {
        return Err(Error::TooLarge(format!(
            "{}x{} tables are beyond the exhaustive oracle (at most 3x3)",
            rows.len(),
            cols.len()
        )));
    }
    let free = ((rows.len() - 1) * (cols.len() - 1)) as i32;
    let estimate = (n_trials as f64 + 1.0).powi(free);
    if estimate > MAX_TABLES {
        return Err(Error::TooLarge(format!(
            "up to {estimate:.2e} tables at N = {n_trials}, limit {MAX_TABLES:.0e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveResult {
    pub table: DMatrix<u64>,
    pub log_prob: f64,
    /// Log of the total probability of all tables with the target marginals.
    pub log_event_prob: f64,
    pub tables_visited: u64,
}

/// The integer table with row sums `N α̃` and column sums `N β̃` that is most
/// probable under the multinomial law with cell probabilities `p`.
pub fn exhaustive_most_likely_coupling(
    p: &DMatrix<f64>,
    alpha_tilde: &[f64],
    beta_tilde: &[f64],
    n_trials: u64,
) -> Result<ExhaustiveResult> {
    if p.nrows() != alpha_tilde.len() || p.ncols() != beta_tilde.len() {
        return Err(Error::DimensionMismatch {
            expected: p.nrows(),
            got: alpha_tilde.len(),
        });
    }
    if p.iter().any(|x| x.is_nan() || *x <= 0.0) {
        return Err(Error::PriorDegenerate(
            "enumeration needs a strictly positive prior".into(),
        ));
    }
    if p.is_empty() || n_trials == 0 {
        return Err(Error::InvalidParameter(
            "enumeration needs a nonempty table and N > 0".into(),
        ));
    }
    let rows = integral_targets(alpha_tilde, n_trials)?;
    let cols = integral_targets(beta_tilde, n_trials)?;
    check_size(&rows, &cols, n_trials)?;
    let mut best: Option<(DMatrix<u64>, f64)> = None;
    let mut logs = Vec::new();
    for_each_table(&rows, &cols, |t| {
        let lp = multinomial_log_prob(t, p);
        logs.push(lp);
        if best.as_ref().is_none_or(|(_, b)| lp > *b) {
            best = Some((t.clone(), lp));
        }
    });
    let (table, log_prob) = best.ok_or(Error::InfeasibleMarginals { n: n_trials })?;
    Ok(ExhaustiveResult {
        table,
        log_prob,
        log_event_prob: log_sum_exp(&logs),
        tables_visited: logs.len() as u64,
    })
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Exact large-deviation rates along a ladder of sample sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct SanovReport {
    pub n_ladder: Vec<u64>,
    pub alpha_tilde: Vec<f64>,
    pub beta_tilde: Vec<f64>,
    /// `KL(p̃* ‖ p)`.
    pub bridge_kl: f64,
    /// `−log P_N / N` for the event that the empirical marginals equal the targets.
    pub rates: Vec<f64>,
    /// `|rate − KL| / KL`, or the absolute gap when the KL vanishes.
    pub deviations: Vec<f64>,
    /// `KL(q_N ‖ p)` of the most likely table `q_N` (normalized).
    pub best_empirical_kl: Vec<f64>,
    /// `KL(q_N ‖ p̃*)`.
    pub distance_to_bridge: Vec<f64>,
    /// Smallest `C` with `|rate − KL| ≤ C log N / N` on the ladder.
    pub fitted_c: f64,
    /// Whether `|rate − KL|` decreases along the ladder.
    pub monotone: bool,
}

/// Compares exact event probabilities with the bridge rate `KL(p̃* ‖ p)` on a 2×2 prior.
pub fn sanov_decay_check(
    p: &DMatrix<f64>,
    alpha_tilde: &[f64],
    beta_tilde: &[f64],
    n_ladder: &[u64],
) -> Result<SanovReport> {
    if p.shape() != (2, 2) {
        return Err(Error::InvalidParameter(
            "the decay check is defined for 2x2 priors".into(),
        ));
    }
    let solve = solve_coupling(p, alpha_tilde, beta_tilde, &SinkhornOptions::default())?;
    let bridge = solve.coupling.matrix();
    let bridge_kl = rate_function(bridge, p)?;
    let mut rates = Vec::new();
    let mut deviations = Vec::new();
    let mut best_empirical_kl = Vec::new();
    let mut distance_to_bridge = Vec::new();
    let mut fitted_c: f64 = 0.0;
    let mut gaps = Vec::new();
    for &n in n_ladder {
        let ex = exhaustive_most_likely_coupling(p, alpha_tilde, beta_tilde, n)?;
        let rate = -ex.log_event_prob / n as f64;
        let gap = (rate - bridge_kl).abs();
        let q = ex.table.map(|k| k as f64 / n as f64);
        rates.push(rate);
        deviations.push(if bridge_kl > 0.0 {
            gap / bridge_kl
        } else {
            gap
        });
        best_empirical_kl.push(rate_function(&q, p)?);
        distance_to_bridge.push(rate_function(&q, bridge)?);
        if n > 1 {
            fitted_c = fitted_c.max(gap * n as f64 / (n as f64).ln());
        }
        gaps.push(gap);
    }
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]);
    Ok(SanovReport {
        n_ladder: n_ladder.to_vec(),
        alpha_tilde: alpha_tilde.to_vec(),
        beta_tilde: beta_tilde.to_vec(),
        bridge_kl,
        rates,
        deviations,
        best_empirical_kl,
        distance_to_bridge,
        fitted_c,
        monotone,
    })
}
