//! Result documents written by the subcommands.

use anyhow::{Context, Result};
use nalgebra::DMatrix;
use qbridge::bridge::BridgeSolution;
use qbridge::ensemble::{SanovReport, TrajectoryCounts};
use qbridge::Check;
use serde::{Deserialize, Serialize};

use crate::config::{ComplexMatrix, ConfigDocument};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl From<&Check> for CheckRecord {
    fn from(c: &Check) -> Self {
        Self {
            name: c.name.clone(),
            residual: c.residual,
            tolerance: c.tolerance,
            passed: c.passed(),
        }
    }
}

impl CheckRecord {
    /// Recomputes the pass flag from the stored residual and tolerance.
    pub fn reverified(&self) -> bool {
        self.residual <= self.tolerance
    }
}

pub fn records(checks: &[Check]) -> Vec<CheckRecord> {
    checks.iter().map(CheckRecord::from).collect()
}

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

pub fn count_rows(m: &DMatrix<u64>) -> Vec<Vec<u64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdatedOperator {
    pub i: usize,
    pub k: Vec<usize>,
    pub j: usize,
    pub op: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSection {
    pub coupling: Vec<Vec<f64>>,
    pub prior_coupling: Vec<Vec<f64>>,
    pub potentials_a: Vec<f64>,
    pub potentials_b: Vec<f64>,
    pub kl: f64,
    pub iterations: usize,
    pub rho0_tilde: ComplexMatrix,
    pub rho1_tilde: ComplexMatrix,
    pub updated_channel: Vec<UpdatedOperator>,
}

impl From<&BridgeSolution> for SolveSection {
    fn from(b: &BridgeSolution) -> Self {
        Self {
            coupling: rows(b.coupling.matrix()),
            prior_coupling: rows(&b.prior_joint),
            potentials_a: b.potentials.a.clone(),
            potentials_b: b.potentials.b.clone(),
            kl: b.kl_value,
            iterations: b.iterations,
            rho0_tilde: ComplexMatrix::from_cmat(b.rho0_tilde.matrix()),
            rho1_tilde: ComplexMatrix::from_cmat(b.rho1_tilde.matrix()),
            updated_channel: b
                .updated_kraus
                .iter()
                .map(|s| UpdatedOperator {
                    i: s.i,
                    k: s.k.clone(),
                    j: s.j,
                    op: ComplexMatrix::from_cmat(&s.op),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntermediateRow {
    pub tau: f64,
    pub prior: Vec<f64>,
    pub bridge: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDeltaRow {
    pub delta: f64,
    pub i: usize,
    pub j: usize,
    pub average: f64,
    pub closed_form: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MostLikelyWeak {
    pub forward: f64,
    pub reversed: f64,
    pub disintegration: f64,
    pub tau: f64,
    pub quadrature_error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakSection {
    /// `Z_W` per endpoint pair; `None` where the pre/post overlap vanishes.
    pub weak_values: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub most_likely: Option<MostLikelyWeak>,
    /// Why the most likely value is absent, if it is.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub most_likely_unavailable: Option<String>,
    pub finite_delta: Vec<FiniteDeltaRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanovSection {
    pub n_ladder: Vec<u64>,
    pub bridge_kl: f64,
    pub rates: Vec<f64>,
    pub deviations: Vec<f64>,
    pub best_empirical_kl: Vec<f64>,
    pub distance_to_bridge: Vec<f64>,
    pub fitted_c: f64,
    pub monotone: bool,
}

impl From<&SanovReport> for SanovSection {
    fn from(r: &SanovReport) -> Self {
        Self {
            n_ladder: r.n_ladder.clone(),
            bridge_kl: r.bridge_kl,
            rates: r.rates.clone(),
            deviations: r.deviations.clone(),
            best_empirical_kl: r.best_empirical_kl.clone(),
            distance_to_bridge: r.distance_to_bridge.clone(),
            fitted_c: r.fitted_c,
            monotone: r.monotone,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSection {
    pub trials: u64,
    pub seed: u64,
    pub counts: Vec<Vec<u64>>,
    pub row_marginals: Vec<f64>,
    pub col_marginals: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sanov: Option<SanovSection>,
}

impl From<&TrajectoryCounts> for SimulationSection {
    fn from(t: &TrajectoryCounts) -> Self {
        Self {
            trials: t.n_trials,
            seed: t.seed,
            counts: count_rows(&t.counts),
            row_marginals: t.row_marginals(),
            col_marginals: t.col_marginals(),
            sanov: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: String,
    pub command: String,
    pub config: ConfigDocument,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub intermediate: Vec<IntermediateRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak: Option<WeakSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSection>,
}

impl ResultDocument {
    pub fn new(command: &str, config: ConfigDocument) -> Self {
        Self {
            schema_version: crate::config::SCHEMA_VERSION.into(),
            command: command.into(),
            config,
            passed: true,
            checks: Vec::new(),
            error: None,
            solve: None,
            intermediate: Vec::new(),
            weak: None,
            simulation: None,
        }
    }

    pub fn push_checks(&mut self, checks: &[Check]) {
        self.checks.extend(records(checks));
        self.passed = self.passed && checks.iter().all(Check::passed);
    }

    /// Pass flags recomputed from residuals and tolerances.
    pub fn reverified_flags(&self) -> Vec<bool> {
        self.checks.iter().map(CheckRecord::reverified).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self).context("cannot serialize result")?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("malformed result document")
    }
}
