//! Seeded random instances for property sweeps: Haar-like unitaries and bases,
//! Stinespring channels, states and experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::experiment::{ChannelModel, ExperimentSpec, IntermediateMeasurement, SplitChannel};
use crate::qcore::{
    c64, CMat, ChannelFamily, DensityMatrix, KrausChannel, Observable, OrthonormalBasis,
};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        c64(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    })
}

/// Haar-distributed unitary from the QR factorization of a complex Gaussian matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let qr = gaussian_matrix(n, n, rng).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c64(1.0, 0.0)
        };
        for row in 0..n {
            q[(row, k)] *= phase;
        }
    }
    q
}

pub fn random_basis<R: Rng>(n: usize, rng: &mut R) -> OrthonormalBasis {
    OrthonormalBasis::new(random_unitary(n, rng)).expect("unitary columns are orthonormal")
}

/// Probability vector with every entry at least `floor / n`.
pub fn random_probability<R: Rng>(n: usize, floor: f64, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n)
        .map(|_| -rng.random::<f64>().max(1e-300).ln())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter()
        .map(|x| (1.0 - floor) * x / total + floor / n as f64)
        .collect()
}

/// Channel with `rank` Kraus operators cut from a random isometry.
pub fn random_channel<R: Rng>(n: usize, rank: usize, rng: &mut R) -> KrausChannel {
    let u = random_unitary(n * rank, rng);
    let ops = (0..rank)
        .map(|k| u.view((k * n, 0), (n, n)).into_owned())
        .collect();
    KrausChannel::new(ops).expect("blocks of an isometry are complete")
}

pub fn random_density<R: Rng>(n: usize, rng: &mut R) -> DensityMatrix {
    let g = gaussian_matrix(n, n, rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m / c64(tr, 0.0)).expect("normalized Gram matrix is a state")
}

/// Experiment with random bases, marginals and a rank-2 channel over `(0, 1)`.
pub fn random_spec<R: Rng>(n: usize, rng: &mut R) -> Result<ExperimentSpec> {
    let basis0 = random_basis(n, rng);
    let basis1 = random_basis(n, rng);
    let channel = random_channel(n, 2, rng);
    ExperimentSpec::new(
        basis0,
        basis1,
        random_probability(n, 0.2, rng),
        ChannelModel::Single(channel),
        random_probability(n, 0.2, rng),
        random_probability(n, 0.2, rng),
    )
}

/// Experiment split at `τ` by a projective measurement of a random observable.
pub fn random_split_spec<R: Rng>(n: usize, tau: f64, rng: &mut R) -> Result<ExperimentSpec> {
    let obs = Observable::new(
        random_basis(n, rng),
        (0..n).map(|k| k as f64 - 0.5 * (n - 1) as f64).collect(),
    )?;
    random_split_spec_with(n, tau, IntermediateMeasurement::Projective(obs), rng)
}

pub fn random_split_spec_with<R: Rng>(
    n: usize,
    tau: f64,
    intermediate: IntermediateMeasurement,
    rng: &mut R,
) -> Result<ExperimentSpec> {
    let basis0 = random_basis(n, rng);
    let basis1 = random_basis(n, rng);
    let pre = ChannelFamily::Fixed(random_channel(n, 2, rng));
    let post = ChannelFamily::Fixed(random_channel(n, 2, rng));
    ExperimentSpec::new(
        basis0,
        basis1,
        random_probability(n, 0.2, rng),
        ChannelModel::Split(SplitChannel::new(pre, intermediate, post, tau)),
        random_probability(n, 0.2, rng),
        random_probability(n, 0.2, rng),
    )
}
