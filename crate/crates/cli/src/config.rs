//! Experiment configuration documents.
//!
//! Configs are JSON. Complex matrices are written as `{"re": [[..]], "im": [[..]]}`
//! with row-major nested arrays; `im` may be omitted for real matrices. Basis
//! vectors are the columns of their matrix.

use anyhow::{bail, Context, Result};
use qbridge::bridge::SinkhornOptions;
use qbridge::experiment::{
    alpha_from_state, ChannelModel, ExperimentSpec, IntermediateMeasurement, SplitChannel,
};
use qbridge::inference::DEFAULT_NODES;
use qbridge::qcore::{
    c64, validate_density, CMat, ChannelFamily, KrausChannel, Observable, OrthonormalBasis,
};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl ComplexMatrix {
    pub fn from_cmat(m: &CMat) -> Self {
        let rows = |f: &dyn Fn(usize, usize) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows())
                .map(|r| (0..m.ncols()).map(|c| f(r, c)).collect())
                .collect()
        };
        let im = rows(&|r, c| m[(r, c)].im);
        let has_im = im.iter().flatten().any(|x| *x != 0.0);
        Self {
            re: rows(&|r, c| m[(r, c)].re),
            im: has_im.then_some(im),
        }
    }

    pub fn to_cmat(&self) -> Result<CMat> {
        let n = self.re.len();
        let m = self.re.first().map_or(0, Vec::len);
        if n == 0 || m == 0 || self.re.iter().any(|row| row.len() != m) {
            bail!("matrix rows must be non-empty and of equal length");
        }
        if let Some(im) = &self.im {
            if im.len() != n || im.iter().any(|row| row.len() != m) {
                bail!("imaginary part has a different shape from the real part");
            }
        }
        Ok(CMat::from_fn(n, m, |r, c| {
            c64(self.re[r][c], self.im.as_ref().map_or(0.0, |im| im[r][c]))
        }))
    }
}

/// A basis given by name or by an explicit unitary whose columns are the vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BasisConfig {
    Named(NamedBasis),
    Explicit(ComplexMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedBasis {
    /// Eigenbasis of σ_z (qubit) or the standard basis in any dimension.
    Computational,
    /// Eigenbasis of σ_x, `|±⟩`.
    X,
}

impl BasisConfig {
    fn build(&self, dim: usize) -> Result<OrthonormalBasis> {
        Ok(match self {
            Self::Named(NamedBasis::Computational) => OrthonormalBasis::computational(dim),
            Self::Named(NamedBasis::X) => {
                if dim != 2 {
                    bail!("the x basis is defined for qubits only");
                }
                OrthonormalBasis::qubit_x()
            }
            Self::Explicit(m) => OrthonormalBasis::new(m.to_cmat()?)?,
        })
    }

    fn explicit_dim(&self) -> Option<usize> {
        match self {
            Self::Explicit(m) => Some(m.re.len()),
            Self::Named(NamedBasis::X) => Some(2),
            Self::Named(NamedBasis::Computational) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelConfig {
    Identity,
    AmplitudeDamping { gamma: f64 },
    Depolarizing { p: f64 },
    Unitary { hamiltonian: ComplexMatrix },
    Explicit { ops: Vec<ComplexMatrix> },
}

impl ChannelConfig {
    fn family(&self, dim: usize) -> Result<ChannelFamily> {
        Ok(match self {
            Self::Identity => ChannelFamily::Identity { dim },
            Self::AmplitudeDamping { gamma } => ChannelFamily::AmplitudeDamping { gamma: *gamma },
            Self::Depolarizing { p } => ChannelFamily::Depolarizing { dim, p: *p },
            Self::Unitary { hamiltonian } => ChannelFamily::Unitary {
                hamiltonian: hamiltonian.to_cmat()?,
            },
            Self::Explicit { ops } => {
                let ops = ops
                    .iter()
                    .map(ComplexMatrix::to_cmat)
                    .collect::<Result<Vec<_>>>()?;
                ChannelFamily::Fixed(KrausChannel::new(ops)?)
            }
        })
    }

    fn explicit_dim(&self) -> Option<usize> {
        match self {
            Self::AmplitudeDamping { .. } => Some(2),
            Self::Unitary { hamiltonian } => Some(hamiltonian.re.len()),
            Self::Explicit { ops } => ops.first().map(|o| o.re.len()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableConfig {
    pub basis: BasisConfig,
    pub eigenvalues: Vec<f64>,
}

impl ObservableConfig {
    fn build(&self, dim: usize) -> Result<Observable> {
        Ok(Observable::new(
            self.basis.build(dim)?,
            self.eigenvalues.clone(),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntermediateConfig {
    None,
    Projective {
        observable: ObservableConfig,
    },
    Generalized {
        ops: Vec<ComplexMatrix>,
    },
    /// Weak measurement; `delta` falls back to `inference.delta`.
    Weak {
        observable: ObservableConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub basis0: BasisConfig,
    pub basis1: BasisConfig,
    /// Initial outcome probabilities; alternatively derived from `rho0_minus`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    /// State before the initial measurement, `α_i = ⟨x_i|ρ|x_i⟩`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0_minus: Option<ComplexMatrix>,
    pub alpha_tilde: Vec<f64>,
    pub beta_tilde: Vec<f64>,
    pub channel: ChannelConfig,
    /// Channel after the intermediate measurement; defaults to `channel`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post_channel: Option<ChannelConfig>,
    /// With an intermediate measurement the evolution is split at `inference.tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intermediate: Option<IntermediateConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `Σ_j b_j = 1`.
    SumBOne,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_gauge")]
    pub gauge: Gauge,
}

fn default_tol() -> f64 {
    qbridge::tolerance::SINKHORN_TOL
}
fn default_max_iter() -> usize {
    qbridge::tolerance::SINKHORN_MAX_ITER
}
fn default_gauge() -> Gauge {
    Gauge::SumBOne
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            gauge: default_gauge(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferenceConfig {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Strengths for the finite-δ convergence table.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub delta_ladder: Vec<f64>,
    #[serde(default = "default_nodes")]
    pub quadrature_nodes: usize,
}

fn default_tau() -> f64 {
    0.5
}
fn default_nodes() -> usize {
    DEFAULT_NODES
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            tau: default_tau(),
            tau_grid: None,
            delta: None,
            delta_ladder: Vec::new(),
            quadrature_nodes: default_nodes(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    /// The prior experiment, `p_ij`.
    Prior,
    /// The bridge coupling `p̃*_ij`.
    Bridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub trials: u64,
    pub seed: u64,
    #[serde(default = "default_source")]
    pub source: SampleSource,
    /// Trial counts for the exact-enumeration rate check (2×2 experiments only).
    #[serde(default = "default_ladder")]
    pub sanov_ladder: Vec<u64>,
}

fn default_source() -> SampleSource {
    SampleSource::Prior
}
fn default_ladder() -> Vec<u64> {
    vec![20, 60, 100, 300]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub schema_version: String,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub inference: InferenceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
}

impl ConfigDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).context("malformed config")?;
        if doc.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {:?} (expected {SCHEMA_VERSION:?})",
                doc.schema_version
            );
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn sinkhorn(&self) -> SinkhornOptions {
        SinkhornOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }

    fn dim(&self) -> Result<usize> {
        let e = &self.experiment;
        let candidates = [
            e.dim,
            e.basis0.explicit_dim(),
            e.basis1.explicit_dim(),
            e.channel.explicit_dim(),
            e.post_channel
                .as_ref()
                .and_then(ChannelConfig::explicit_dim),
            Some(e.alpha_tilde.len()),
        ];
        let mut dims = candidates.iter().flatten();
        let dim = *dims.next().expect("alpha_tilde length is always present");
        if let Some(other) = dims.find(|d| **d != dim) {
            bail!("inconsistent dimensions in experiment: {dim} vs {other}");
        }
        if dim == 0 {
            bail!("dimension must be positive");
        }
        Ok(dim)
    }

    /// The experiment with its intermediate measurement at `inference.tau`.
    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        let e = &self.experiment;
        let dim = self.dim()?;
        let basis0 = e.basis0.build(dim)?;
        let basis1 = e.basis1.build(dim)?;
        let alpha = match (&e.alpha, &e.rho0_minus) {
            (Some(a), None) => a.clone(),
            (None, Some(rho)) => alpha_from_state(&basis0, &validate_density(rho.to_cmat()?)?)?,
            _ => bail!("exactly one of alpha and rho0_minus must be given"),
        };
        let channel = match &e.intermediate {
            None => {
                if e.post_channel.is_some() {
                    bail!("post_channel requires an intermediate measurement");
                }
                ChannelModel::Single(e.channel.family(dim)?.channel(0.0, 1.0)?)
            }
            Some(inter) => {
                let pre = e.channel.family(dim)?;
                let post = e.post_channel.as_ref().unwrap_or(&e.channel).family(dim)?;
                let intermediate = match inter {
                    IntermediateConfig::None => IntermediateMeasurement::None,
                    IntermediateConfig::Projective { observable } => {
                        IntermediateMeasurement::Projective(observable.build(dim)?)
                    }
                    IntermediateConfig::Generalized { ops } => {
                        IntermediateMeasurement::Generalized(
                            ops.iter()
                                .map(ComplexMatrix::to_cmat)
                                .collect::<Result<_>>()?,
                        )
                    }
                    IntermediateConfig::Weak { observable, delta } => {
                        IntermediateMeasurement::Weak {
                            observable: observable.build(dim)?,
                            delta: delta
                                .or(self.inference.delta)
                                .context("a weak measurement needs delta")?,
                        }
                    }
                };
                ChannelModel::Split(SplitChannel::new(
                    pre,
                    intermediate,
                    post,
                    self.inference.tau,
                ))
            }
        };
        Ok(ExperimentSpec::new(
            basis0,
            basis1,
            alpha,
            channel,
            e.alpha_tilde.clone(),
            e.beta_tilde.clone(),
        )?)
    }
}

/// `N` points from `10⁻⁸` to `1 − 10⁻⁸`.
pub fn tau_grid(n: usize) -> Vec<f64> {
    const EDGE: f64 = 1e-8;
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n)
            .map(|k| EDGE + k as f64 * (1.0 - 2.0 * EDGE) / (n - 1) as f64)
            .collect(),
    }
}
