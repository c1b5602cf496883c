//! The four subcommands and their exit-code contract.
//!
//! Exit 0 when every verification passes, 2 when a numerical identity fails
//! (the residual report is written to the result document and standard error),
//! 1 for unreadable or invalid input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use qbridge::bridge::{solve_bridge, BridgeSolution};
use qbridge::ensemble::{sample_from_coupling_with_workers, sanov_decay_check};
use qbridge::experiment::{prior_joint, ExperimentSpec, IntermediateMeasurement, PriorModel};
use qbridge::inference::{
    finite_delta_weak_average, most_likely_weak_value, projective_sweep, weak_value, Quadrature,
};
use qbridge::reversal::{check_equivalence, solve_reverse_bridge, ReverseOptions};
use qbridge::{Check, Error};

use crate::config::{tau_grid, ConfigDocument, SampleSource};
use crate::result::{
    FiniteDeltaRow, IntermediateRow, MostLikelyWeak, ResultDocument, SanovSection,
    SimulationSection, SolveSection, WeakSection,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_VERIFICATION: u8 = 2;

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub seed: Option<u64>,
    pub tau_grid: Option<usize>,
    pub quad_nodes: Option<usize>,
    pub workers: Option<usize>,
}

impl Overrides {
    fn apply(&self, doc: &mut ConfigDocument) {
        if let Some(tol) = self.tol {
            doc.solver.tol = tol;
        }
        if let Some(max_iter) = self.max_iter {
            doc.solver.max_iter = max_iter;
        }
        if let Some(n) = self.tau_grid {
            doc.inference.tau_grid = Some(n);
        }
        if let Some(n) = self.quad_nodes {
            doc.inference.quadrature_nodes = n;
        }
        if let (Some(seed), Some(sim)) = (self.seed, doc.simulate.as_mut()) {
            sim.seed = seed;
        }
    }
}

#[derive(Debug)]
pub enum Failure {
    Input(anyhow::Error),
    Verification { message: String, checks: Vec<Check> },
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => EXIT_INPUT,
            Self::Verification { .. } => EXIT_VERIFICATION,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        match e {
            Error::ConsistencyViolation(checks) | Error::EquivalenceViolation(checks) => {
                Self::Verification { message, checks }
            }
            Error::QuadratureTolExceeded { defect, tol } => Self::Verification {
                message,
                checks: vec![Check::new("quadrature", defect, tol)],
            },
            Error::NoConvergence { residual, .. } => Self::Verification {
                message,
                checks: vec![Check::new(
                    "sinkhorn_residual",
                    residual,
                    qbridge::tolerance::SINKHORN_TOL,
                )],
            },
            other => Self::Input(anyhow!(other)),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<Error>() {
            Ok(core) => core.into(),
            Err(e) => Self::Input(e),
        }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Intermediate,
    Weak,
    Simulate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Intermediate => "intermediate",
            Self::Weak => "weak",
            Self::Simulate => "simulate",
        }
    }
}

/// Runs a subcommand, writes its output and returns the process exit code.
pub fn run(command: Command, config: &Path, out: &Path, overrides: &Overrides) -> u8 {
    let mut doc = match ConfigDocument::load(config) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e:#}");
            return EXIT_INPUT;
        }
    };
    overrides.apply(&mut doc);
    let workers = overrides.workers.unwrap_or(1).max(1);
    let outcome = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| dispatch(command, &doc, out, workers)),
        Err(e) => Err(Failure::Input(anyhow!("cannot start worker pool: {e}"))),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            report(command, doc, out, &failure);
            failure.exit_code()
        }
    }
}

fn dispatch(command: Command, doc: &ConfigDocument, out: &Path, workers: usize) -> CmdResult<()> {
    match command {
        Command::Solve => write_result(out, &cmd_solve(doc)?),
        Command::Intermediate => write_text(out, &cmd_intermediate(doc)?),
        Command::Weak => write_result(out, &cmd_weak(doc)?),
        Command::Simulate => write_result(out, &cmd_simulate(doc, workers)?),
    }
}

fn report(command: Command, doc: ConfigDocument, out: &Path, failure: &Failure) {
    match failure {
        Failure::Input(e) => eprintln!("error: {e:#}"),
        Failure::Verification { message, checks } => {
            eprintln!("verification failed: {message}");
            for c in checks {
                eprintln!(
                    "  {:<28} residual {:.3e}  tolerance {:.1e}  {}",
                    c.name,
                    c.residual,
                    c.tolerance,
                    if c.passed() { "pass" } else { "FAIL" }
                );
            }
            // The CSV output has no place for a residual report.
            if command != Command::Intermediate {
                let mut result = ResultDocument::new(command.name(), doc);
                result.push_checks(checks);
                result.passed = false;
                result.error = Some(message.clone());
                if let Err(Failure::Input(e)) = write_result(out, &result) {
                    eprintln!("error: {e:#}");
                }
            }
        }
    }
}

fn write_text(out: &Path, text: &str) -> CmdResult<()> {
    std::fs::write(out, text)
        .with_context(|| format!("cannot write {}", out.display()))
        .map_err(Failure::Input)
}

fn write_result(out: &Path, result: &ResultDocument) -> CmdResult<()> {
    write_text(out, &result.to_json()?)
}

struct Solved {
    spec: ExperimentSpec,
    prior: PriorModel,
    bridge: BridgeSolution,
}

fn solve(doc: &ConfigDocument, spec: ExperimentSpec) -> CmdResult<Solved> {
    let prior = prior_joint(&spec)?;
    let bridge = solve_bridge(&spec, &prior, &doc.sinkhorn()).map_err(|e| match e {
        Error::NoConvergence { residual, .. } => Failure::Verification {
            message: e.to_string(),
            checks: vec![Check::new("sinkhorn_residual", residual, doc.solver.tol)],
        },
        other => other.into(),
    })?;
    Ok(Solved {
        spec,
        prior,
        bridge,
    })
}

/// Bridge, reversed bridge and their equivalence checks.
pub fn cmd_solve(doc: &ConfigDocument) -> CmdResult<ResultDocument> {
    let Solved {
        spec,
        prior,
        bridge,
    } = solve(doc, doc.experiment_spec()?)?;
    let reverse_opts = ReverseOptions {
        independent_solve: true,
        sinkhorn: doc.sinkhorn(),
    };
    let reversed = solve_reverse_bridge(&spec, &prior, &bridge, &reverse_opts)?;
    let equivalence = check_equivalence(&prior, &bridge, &reversed)?;
    let mut result = ResultDocument::new(Command::Solve.name(), doc.clone());
    result.push_checks(&bridge.checks);
    result.push_checks(&prefixed("reversed", &reversed.checks));
    result.push_checks(&prefixed("equivalence", &equivalence));
    result.solve = Some(SolveSection::from(&bridge));
    Ok(result)
}

fn prefixed(prefix: &str, checks: &[Check]) -> Vec<Check> {
    checks
        .iter()
        .map(|c| Check::new(format!("{prefix}.{}", c.name), c.residual, c.tolerance))
        .collect()
}

/// Prior and most likely intermediate distributions over the τ grid, as CSV.
pub fn cmd_intermediate(doc: &ConfigDocument) -> CmdResult<String> {
    let spec = doc.experiment_spec()?;
    match &spec.split()?.intermediate {
        IntermediateMeasurement::Projective(_) => {}
        _ => bail_input("the intermediate command needs a projective intermediate measurement")?,
    }
    let n = doc
        .inference
        .tau_grid
        .ok_or_else(|| Failure::Input(anyhow!("inference.tau_grid is required")))?;
    if n < 2 {
        bail_input("inference.tau_grid must be at least 2")?;
    }
    let rows: Vec<IntermediateRow> = projective_sweep(&spec, &tau_grid(n), &doc.sinkhorn())?
        .into_iter()
        .map(|r| IntermediateRow {
            tau: r.tau,
            prior: r.prior,
            bridge: r.bridge,
        })
        .collect();
    Ok(intermediate_csv(spec.dim(), &rows))
}

fn bail_input(msg: &str) -> CmdResult<()> {
    Err(Failure::Input(anyhow!(msg.to_string())))
}

/// Seventeen significant digits in scientific notation, independent of locale.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn intermediate_csv(dim: usize, rows: &[IntermediateRow]) -> String {
    let mut out = String::from("tau");
    for prefix in ["prior", "bridge"] {
        for z in 0..dim {
            write!(out, ",{prefix}_p{z}").expect("writing to a String");
        }
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format_value(row.tau));
        for x in row.prior.iter().chain(&row.bridge) {
            out.push(',');
            out.push_str(&format_value(*x));
        }
        out.push('\n');
    }
    out
}

/// Weak values per endpoint pair, the most likely weak value and the finite-δ table.
pub fn cmd_weak(doc: &ConfigDocument) -> CmdResult<ResultDocument> {
    let spec = doc.experiment_spec()?;
    if spec.split()?.intermediate.observable().is_none() {
        bail_input("the weak command needs an intermediate observable")?;
    }
    let quad = Quadrature::new(doc.inference.quadrature_nodes)?;
    let n = spec.dim();
    let m = spec.basis1.dim();
    let mut weak_values = vec![vec![None; m]; n];
    for (i, row) in weak_values.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = match weak_value(&spec, i, j) {
                Ok(v) => Some(v),
                Err(Error::ZeroOverlap { .. }) => None,
                Err(e) => return Err(e.into()),
            };
        }
    }

    let mut result = ResultDocument::new(Command::Weak.name(), doc.clone());
    let limit = spec.weak_limit();
    let (most_likely, most_likely_unavailable) = match solve(doc, limit.clone()) {
        Ok(Solved { prior, bridge, .. }) => {
            let reversed =
                solve_reverse_bridge(&limit, &prior, &bridge, &ReverseOptions::default())?;
            let w = most_likely_weak_value(&spec, &bridge, &reversed, &quad)?;
            result.push_checks(&w.checks);
            let section = MostLikelyWeak {
                forward: w.value,
                reversed: w.reversed_value,
                disintegration: w.disintegration_value,
                tau: w.tau,
                quadrature_error_estimate: w.quadrature_error_estimate,
            };
            (Some(section), None)
        }
        Err(Failure::Input(e)) => (None, Some(format!("{e:#}"))),
        Err(other) => return Err(other),
    };

    let mut finite_delta = Vec::new();
    for &delta in &doc.inference.delta_ladder {
        for (i, row) in weak_values.iter().enumerate() {
            for (j, zw) in row.iter().enumerate() {
                let Some(zw) = zw else { continue };
                let avg = finite_delta_weak_average(&spec, i, j, delta, &quad)?;
                finite_delta.push(FiniteDeltaRow {
                    delta,
                    i,
                    j,
                    average: avg.value,
                    closed_form: avg.closed_form,
                    error: (avg.value - zw).abs(),
                });
                result.push_checks(&[Check::new(
                    format!("weak_normalization[delta={delta}]"),
                    avg.normalization_defect,
                    qbridge::tolerance::QUADRATURE,
                )]);
            }
        }
    }
    dedup_checks(&mut result);
    if !result.passed {
        let checks = result
            .checks
            .iter()
            .map(|c| Check::new(&c.name, c.residual, c.tolerance))
            .collect();
        return Err(Failure::Verification {
            message: "finite-strength quadrature normalization".into(),
            checks,
        });
    }
    result.weak = Some(WeakSection {
        weak_values,
        most_likely,
        most_likely_unavailable,
        finite_delta,
    });
    Ok(result)
}

fn dedup_checks(result: &mut ResultDocument) {
    let mut seen = std::collections::HashSet::new();
    result.checks.retain(|c| seen.insert(c.name.clone()));
}

/// Monte Carlo counts plus the exact-enumeration rate check when it is feasible.
pub fn cmd_simulate(doc: &ConfigDocument, workers: usize) -> CmdResult<ResultDocument> {
    let sim = doc
        .simulate
        .as_ref()
        .ok_or_else(|| Failure::Input(anyhow!("the config has no simulate block")))?;
    let Solved {
        spec,
        prior,
        bridge,
    } = solve(doc, doc.experiment_spec()?)?;
    let q = match sim.source {
        SampleSource::Prior => &prior.joint,
        SampleSource::Bridge => bridge.coupling.matrix(),
    };
    let counts = sample_from_coupling_with_workers(q, sim.trials, sim.seed, workers)?;
    let mut section = SimulationSection::from(&counts);
    if spec.dim() == 2 && spec.basis1.dim() == 2 {
        let ladder: Vec<u64> = sim
            .sanov_ladder
            .iter()
            .copied()
            .filter(|&n| integral(&spec.alpha_tilde, n) && integral(&spec.beta_tilde, n))
            .collect();
        if !ladder.is_empty() {
            match sanov_decay_check(&prior.joint, &spec.alpha_tilde, &spec.beta_tilde, &ladder) {
                Ok(report) => section.sanov = Some(SanovSection::from(&report)),
                Err(Error::TooLarge(_) | Error::InfeasibleMarginals { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
    }
    let mut result = ResultDocument::new(Command::Simulate.name(), doc.clone());
    result.push_checks(&bridge.checks);
    result.solve = Some(SolveSection::from(&bridge));
    result.simulation = Some(section);
    Ok(result)
}

fn integral(marginal: &[f64], n: u64) -> bool {
    marginal.iter().all(|x| {
        let t = x * n as f64;
        (t - t.round()).abs() <= 1e-9 * (n.max(1) as f64)
    })
}

/// Paths and settings parsed from the command line.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: PathBuf,
    pub overrides: Overrides,
}

impl Invocation {
    pub fn run(&self) -> u8 {
        run(self.command, &self.config, &self.out, &self.overrides)
    }
}

/// Reads a result document back and checks that every stored pass flag
/// agrees with its residual and tolerance.
pub fn reverify_result(path: &Path) -> anyhow::Result<bool> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let doc = ResultDocument::from_json(&text)?;
    let flags = doc.reverified_flags();
    if flags.len() != doc.checks.len() {
        bail!("check list changed length");
    }
    Ok(doc.checks.iter().zip(flags).all(|(c, f)| c.passed == f)
        && doc.passed == doc.checks.iter().all(|c| c.passed))
}
