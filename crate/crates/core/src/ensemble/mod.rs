//! Monte Carlo simulation of the experiment and exact enumeration oracles.

mod rng;
mod sanov;

pub use rng::TrialStream;
pub use sanov::{
    exhaustive_most_likely_coupling, multinomial_log_prob, sanov_decay_check, ExhaustiveResult,
    SanovReport,
};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiment::PriorModel;

/// Empirical joint occurrences of endpoint outcome pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryCounts {
    pub n_trials: u64,
    pub counts: DMatrix<u64>,
    pub seed: u64,
}

impl TrajectoryCounts {
    pub fn empirical(&self) -> DMatrix<f64> {
        let n = self.n_trials.max(1) as f64;
        self.counts.map(|c| c as f64 / n)
    }

    pub fn row_marginals(&self) -> Vec<f64> {
        crate::bridge::row_sums(&self.empirical())
    }

    pub fn col_marginals(&self) -> Vec<f64> {
        crate::bridge::col_sums(&self.empirical())
    }
}

/// `N` independent runs of the prior experiment, drawing `(i, j)` from `p_ij`.
pub fn sample_experiment(prior: &PriorModel, n_trials: u64, seed: u64) -> Result<TrajectoryCounts> {
    sample_from_coupling(&prior.joint, n_trials, seed)
}

pub fn sample_from_coupling(
    q: &DMatrix<f64>,
    n_trials: u64,
    seed: u64,
) -> Result<TrajectoryCounts> {
    sample_from_coupling_with_workers(q, n_trials, seed, 1)
}

/// Trials per work unit; units are merged by summing integer counts.
const CHUNK: u64 = 1 << 14;

/// Draws `N` cells of `q`. Trial `t` uses the `t`-th draw of the stream keyed by
/// `seed`, so the counts do not depend on `workers`.
pub fn sample_from_coupling_with_workers(
    q: &DMatrix<f64>,
    n_trials: u64,
    seed: u64,
    workers: usize,
) -> Result<TrajectoryCounts> {
    if q.is_empty() || q.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidParameter(
            "sampling weights must be finite and nonnegative".into(),
        ));
    }
    let total = q.sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "sampling weights sum to {total}"
        )));
    }
    let (n, m) = q.shape();
    // Row-major cumulative distribution.
    let mut cdf = Vec::with_capacity(n * m);
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..m {
            acc += q[(i, j)];
            cdf.push(acc);
        }
    }
    let last_positive = (0..n * m)
        .rev()
        .find(|&k| q[(k / m, k % m)] > 0.0)
        .unwrap_or(0);
    let draw_chunk = |start: u64| -> Vec<u64> {
        let end = (start + CHUNK).min(n_trials);
        let mut stream = TrialStream::new(seed, start);
        let mut local = vec![0u64; n * m];
        for _ in start..end {
            let u = stream.next_uniform() * acc;
            let cell = cdf.partition_point(|&c| c <= u).min(last_positive);
            local[cell] += 1;
        }
        local
    };
    let starts: Vec<u64> = (0..n_trials.div_ceil(CHUNK)).map(|c| c * CHUNK).collect();
    let merge = |mut a: Vec<u64>, b: Vec<u64>| {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    };
    let flat = if workers <= 1 {
        starts
            .iter()
            .map(|&s| draw_chunk(s))
            .fold(vec![0u64; n * m], merge)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
        pool.install(|| {
            starts
                .par_iter()
                .map(|&s| draw_chunk(s))
                .reduce(|| vec![0u64; n * m], merge)
        })
    };
    Ok(TrajectoryCounts {
        n_trials,
        counts: DMatrix::from_fn(n, m, |i, j| flat[i * m + j]),
        seed,
    })
}
