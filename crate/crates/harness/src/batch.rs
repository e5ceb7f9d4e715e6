//! Batch execution: per-instance mechanism runs, oracle comparisons and
//! invariant checks, with a summary and a flat table.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use expdesign::{
    brute_force_opt, greedy_max_baseline, run_mechanism, value, Branch, Instance, MechanismConfig, MechanismOutcome,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::format::{instance_digest, load_instance};
use crate::generate::{generate_instance, CostModel, GeneratorConfig};
use crate::{HarnessError, Result};

/// Approximation ratio checked against the brute-force optimum.
pub const RATIO_BOUND: f64 = 12.98;

/// Largest `n` for which the brute-force oracle is run.
pub const ORACLE_MAX_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    #[default]
    Brute,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    File { file: PathBuf },
    Generated(GeneratorConfig),
}

impl InstanceSource {
    fn label(&self) -> String {
        match self {
            InstanceSource::File { file } => file.display().to_string(),
            InstanceSource::Generated(g) => format!("{}:n={}:d={}:seed={}", g.cost_model.name(), g.n, g.d, g.seed),
        }
    }

    fn load(&self, base: &Path) -> Result<Instance> {
        match self {
            InstanceSource::File { file } => Ok(load_instance(&base.join(file))?.0),
            InstanceSource::Generated(g) => Ok(generate_instance(g)?.instance),
        }
    }
}

/// Generated instances for every seed in `seeds[0]..seeds[1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub n: usize,
    pub d: usize,
    pub cost_model: CostModel,
    pub seeds: [u64; 2],
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub cost_ceiling: Option<f64>,
}

fn default_delta() -> f64 {
    0.05
}

fn default_epsilon() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub pay_tol: Option<f64>,
    #[serde(default)]
    pub oracle: OracleMode,
    #[serde(default)]
    pub instances: Vec<InstanceSource>,
    #[serde(default)]
    pub sweeps: Vec<Sweep>,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            delta: default_delta(),
            epsilon: default_epsilon(),
            pay_tol: None,
            oracle: OracleMode::Brute,
            instances: Vec::new(),
            sweeps: Vec::new(),
        }
    }
}

impl BatchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Json(path.display().to_string(), e))
    }

    pub fn mechanism_config(&self) -> MechanismConfig {
        MechanismConfig { pay_tol: self.pay_tol, ..MechanismConfig::new(self.epsilon, self.delta) }
    }

    /// Explicit instances first, then the sweeps in order.
    pub fn sources(&self) -> Vec<InstanceSource> {
        let mut out = self.instances.clone();
        for sweep in &self.sweeps {
            for seed in sweep.seeds[0]..sweep.seeds[1] {
                let mut g = GeneratorConfig::new(sweep.n, sweep.d, sweep.cost_model, seed);
                if let Some(b) = sweep.budget {
                    g.budget = b;
                }
                if let Some(c) = sweep.cost_ceiling {
                    g.cost_ceiling = c;
                }
                out.push(InstanceSource::Generated(g));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameters {
    pub delta: f64,
    pub epsilon: f64,
    pub pay_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverSummary {
    pub l_hat: f64,
    pub alpha: f64,
    pub eps_prime: f64,
    pub gap_certificate: f64,
    pub newton_iterations: usize,
    pub outer_iterations: usize,
    pub eps_prime_clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeSummary {
    pub branch: String,
    pub allocated: Vec<usize>,
    pub payments: Vec<f64>,
    pub total_payment: f64,
    pub value_allocated: f64,
    pub i_star: usize,
    pub v_star: f64,
    pub opt_minus_istar: f64,
    pub c_vstar: f64,
    pub solver: SolverSummary,
}

impl OutcomeSummary {
    fn new(out: &MechanismOutcome) -> Self {
        let a = &out.allocation;
        Self {
            branch: a.branch.to_string(),
            allocated: a.allocated.clone(),
            payments: out.payments.clone(),
            total_payment: out.total_payment(),
            value_allocated: out.value_allocated,
            i_star: a.i_star,
            v_star: a.v_star,
            opt_minus_istar: a.opt_minus_istar,
            c_vstar: a.c_vstar,
            solver: SolverSummary {
                l_hat: a.solver.l_hat,
                alpha: a.solver.alpha_used,
                eps_prime: a.solver.eps_prime_used,
                gap_certificate: a.solver.gap_certificate,
                newton_iterations: a.solver.newton_iterations,
                outer_iterations: a.solver.outer_iterations,
                eps_prime_clamped: a.solver.eps_prime_clamped,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSummary {
    pub opt: f64,
    pub opt_set: Vec<usize>,
    pub greedy_baseline_value: f64,
    /// `OPT / V(allocated)`; infinite when nothing was allocated but
    /// `OPT > 0`.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Distance to violation; negative when violated.
    pub slack: f64,
}

impl Check {
    fn new(name: &str, slack: f64) -> Self {
        Self { name: name.into(), passed: slack >= 0.0, slack }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Timings {
    pub mechanism_ms: f64,
    pub oracle_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub index: usize,
    pub source: String,
    pub digest: Option<String>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub parameters: Parameters,
    pub error: Option<String>,
    pub outcome: Option<OutcomeSummary>,
    pub oracle: Option<OracleSummary>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub timings: Timings,
}

impl RunReport {
    pub fn succeeded(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }
}

/// Mechanism run, invariant checks and (optionally) the brute-force
/// comparison for one instance.
pub fn run_instance(index: usize, source: &str, instance: &Instance, config: &BatchConfig) -> RunReport {
    let mech = config.mechanism_config();
    let mut report = RunReport {
        index,
        source: source.to_string(),
        digest: Some(instance_digest(instance)),
        n: Some(instance.n()),
        d: Some(instance.dim()),
        parameters: Parameters {
            delta: config.delta,
            epsilon: config.epsilon,
            pay_tol: mech.pay_tol_for(instance.budget()),
        },
        error: None,
        outcome: None,
        oracle: None,
        checks: Vec::new(),
        timings: Timings::default(),
    };
    let start = Instant::now();
    let outcome = match run_mechanism(instance, &mech) {
        Ok(o) => o,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    report.timings.mechanism_ms = start.elapsed().as_secs_f64() * 1e3;
    report.checks = invariant_checks(instance, &outcome);

    if config.oracle == OracleMode::Brute && instance.n() <= ORACLE_MAX_N {
        let start = Instant::now();
        match brute_force_opt(instance) {
            Ok(opt) => {
                let baseline = greedy_max_baseline(instance);
                let greedy_baseline_value = value(instance, &baseline).unwrap_or(f64::NAN);
                let v = outcome.value_allocated;
                let ratio = if v > 0.0 {
                    Some(opt.value / v)
                } else if opt.value > 0.0 {
                    Some(f64::INFINITY)
                } else {
                    None
                };
                report.checks.push(Check::new("approximation", RATIO_BOUND * v + config.epsilon - opt.value));
                report.oracle = Some(OracleSummary { opt: opt.value, opt_set: opt.set, greedy_baseline_value, ratio });
            }
            Err(e) => report.error = Some(e.to_string()),
        }
        report.timings.oracle_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    report.outcome = Some(OutcomeSummary::new(&outcome));
    report
}

/// Normalization, individual rationality and budget, each with its slack.
pub fn invariant_checks(instance: &Instance, outcome: &MechanismOutcome) -> Vec<Check> {
    let mut normalization = f64::INFINITY;
    let mut rationality = f64::INFINITY;
    for (i, &p) in outcome.payments.iter().enumerate() {
        if outcome.allocation.contains(i) {
            rationality = rationality.min(p - instance.cost(i));
        } else {
            normalization = normalization.min(-p.abs());
        }
    }
    let budget = instance.budget() + expdesign::mechanism::BUDGET_TOL - outcome.total_payment();
    vec![
        Check::new("normalization", if normalization.is_finite() { normalization } else { 0.0 }),
        Check::new("individual_rationality", if rationality.is_finite() { rationality } else { 0.0 }),
        Check::new("budget", budget),
    ]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BatchSummary {
    pub instances: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub errors: usize,
    pub singleton_branch: usize,
    pub greedy_branch: usize,
    /// Largest `OPT / V(allocated)` among instances with an oracle value.
    pub max_ratio: Option<f64>,
    pub max_ratio_index: Option<usize>,
    pub max_total_payment: f64,
    pub budget_violations: usize,
    pub invariant_violations: usize,
    pub all_passed: bool,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub reports: Vec<RunReport>,
    pub summary: BatchSummary,
}

fn failed_report(index: usize, source: String, config: &BatchConfig, error: String) -> RunReport {
    RunReport {
        index,
        source,
        digest: None,
        n: None,
        d: None,
        parameters: Parameters {
            delta: config.delta,
            epsilon: config.epsilon,
            pay_tol: config.pay_tol.unwrap_or(f64::NAN),
        },
        error: Some(error),
        outcome: None,
        oracle: None,
        checks: Vec::new(),
        timings: Timings::default(),
    }
}

/// Runs every source; `base` resolves relative instance paths. A failing
/// instance is reported and the rest of the batch continues.
pub fn run_batch(config: &BatchConfig, base: &Path) -> BatchResult {
    let sources = config.sources();
    let reports: Vec<RunReport> = sources
        .par_iter()
        .enumerate()
        .map(|(index, source)| {
            let label = source.label();
            let instance = match source.load(base) {
                Ok(i) => i,
                Err(e) => return failed_report(index, label, config, e.to_string()),
            };
            panic::catch_unwind(AssertUnwindSafe(|| run_instance(index, &label, &instance, config)))
                .unwrap_or_else(|_| failed_report(index, label.clone(), config, "panic while running".into()))
        })
        .collect();
    let summary = summarize(&reports);
    BatchResult { reports, summary }
}

pub fn summarize(reports: &[RunReport]) -> BatchSummary {
    let mut s = BatchSummary { instances: reports.len(), ..BatchSummary::default() };
    for r in reports {
        if r.succeeded() {
            s.succeeded += 1;
        } else {
            s.failed += 1;
        }
        if r.error.is_some() {
            s.errors += 1;
        }
        if let Some(o) = &r.outcome {
            if o.branch == Branch::Singleton.to_string() {
                s.singleton_branch += 1;
            } else {
                s.greedy_branch += 1;
            }
            s.max_total_payment = s.max_total_payment.max(o.total_payment);
        }
        for c in r.checks.iter().filter(|c| !c.passed) {
            match c.name.as_str() {
                "budget" => s.budget_violations += 1,
                "normalization" | "individual_rationality" => s.invariant_violations += 1,
                _ => {}
            }
        }
        if let Some(ratio) = r.oracle.as_ref().and_then(|o| o.ratio) {
            if s.max_ratio.is_none_or(|m| ratio > m) {
                s.max_ratio = Some(ratio);
                s.max_ratio_index = Some(r.index);
            }
        }
    }
    s.all_passed = s.failed == 0;
    s
}

/// One flat row per instance.
#[derive(Debug, Serialize)]
struct TableRow<'a> {
    index: usize,
    source: &'a str,
    digest: &'a str,
    n: Option<usize>,
    d: Option<usize>,
    status: &'static str,
    branch: &'a str,
    allocated: String,
    value_allocated: Option<f64>,
    total_payment: Option<f64>,
    opt: Option<f64>,
    ratio: Option<f64>,
    failed_checks: String,
    error: &'a str,
}

pub fn write_table<W: std::io::Write>(reports: &[RunReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        let outcome = r.outcome.as_ref();
        w.serialize(TableRow {
            index: r.index,
            source: &r.source,
            digest: r.digest.as_deref().unwrap_or(""),
            n: r.n,
            d: r.d,
            status: if r.succeeded() { "ok" } else { "failed" },
            branch: outcome.map_or("", |o| o.branch.as_str()),
            allocated: outcome
                .map(|o| o.allocated.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "))
                .unwrap_or_default(),
            value_allocated: outcome.map(|o| o.value_allocated),
            total_payment: outcome.map(|o| o.total_payment),
            opt: r.oracle.as_ref().map(|o| o.opt),
            ratio: r.oracle.as_ref().and_then(|o| o.ratio),
            failed_checks: r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect::<Vec<_>>().join(" "),
            error: r.error.as_deref().unwrap_or(""),
        })?;
    }
    w.flush().map_err(|e| HarnessError::io(Path::new("<table>"), e))?;
    Ok(())
}

/// Writes `reports.json` (reproducible: no timings), `summary.json`,
/// `table.csv` and `timings.json` into `dir`.
pub fn write_outputs(result: &BatchResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let write = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| HarnessError::io(&path, e))
    };
    write("reports.json", reports_json(&result.reports))?;
    write("summary.json", serde_json::to_string_pretty(&result.summary).expect("summary serializes") + "\n")?;
    let timings: BTreeMap<usize, &Timings> = result.reports.iter().map(|r| (r.index, &r.timings)).collect();
    write("timings.json", serde_json::to_string_pretty(&timings).expect("timings serialize") + "\n")?;
    let table = dir.join("table.csv");
    let file = fs::File::create(&table).map_err(|e| HarnessError::io(&table, e))?;
    write_table(&result.reports, file)
}

/// The report bodies as JSON; timings are not part of it, so identical
/// configurations give identical bytes.
pub fn reports_json(reports: &[RunReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize") + "\n"
}
