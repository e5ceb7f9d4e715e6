use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use expdesign::{non_monotonicity_demo, run_mechanism, MechanismConfig};
use expdesign_harness::batch::{write_outputs, InstanceSource};
use expdesign_harness::props::run_properties;
use expdesign_harness::{
    audit_truthfulness, generate_instance, load_instance, run_batch, BatchConfig, CostModel, GeneratorConfig,
    InstanceFile, OracleMode,
};

#[derive(Parser)]
#[command(name = "expdesign", version, about = "Budget-feasible procurement of D-optimal experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Monotonicity gap δ.
    #[arg(long, global = true, default_value_t = 0.05)]
    delta: f64,
    /// Accuracy ε of the relaxation estimate.
    #[arg(long, global = true, default_value_t = 0.01)]
    eps: f64,
    /// Threshold-payment bisection width (default 1e-6·B).
    #[arg(long, global = true)]
    pay_tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OracleMode::Brute)]
    oracle: OracleMode,
    /// Worker threads for batch work.
    #[arg(long, global = true, env = "EXPDESIGN_WORKERS")]
    workers: Option<usize>,
}

impl Common {
    fn mechanism(&self) -> MechanismConfig {
        MechanismConfig { pay_tol: self.pay_tol, ..MechanismConfig::new(self.eps, self.delta) }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate random instance files.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, value_enum, default_value_t = CostModel::Uniform)]
        cost_model: CostModel,
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        #[arg(long, default_value_t = 1.0)]
        cost_ceiling: f64,
        /// Number of instances, with seeds `seed..seed+count`.
        #[arg(long, default_value_t = 1)]
        count: u64,
    },
    /// Run the mechanism on a batch config or on instance files.
    Run {
        /// A batch config (JSON with `instances`/`sweeps`) or instance files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Misreport audit of every agent of one instance.
    Audit {
        instance: PathBuf,
        #[arg(long, default_value_t = 21)]
        grid: usize,
    },
    /// Reproduce the non-monotonicity counterexample for the
    /// full-information greedy.
    DemoAppendixG,
    /// Run the property suite on generated instances.
    Props {
        #[arg(long, default_value_t = 20)]
        cases: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(workers) = cli.common.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Writes to `--out` when given, stdout otherwise.
fn emit(out: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let common = &cli.common;
    match &cli.command {
        Command::Gen { n, d, cost_model, budget, cost_ceiling, count } => {
            if *count > 1 && common.out.is_none() {
                bail!("--count > 1 needs --out DIR");
            }
            for k in 0..*count {
                let seed = common.seed + k;
                let config = GeneratorConfig {
                    n: *n,
                    d: *d,
                    cost_model: *cost_model,
                    seed,
                    budget: *budget,
                    cost_ceiling: *cost_ceiling,
                };
                let g = generate_instance(&config)?;
                let body = InstanceFile::from_instance(&g.instance, g.metadata).to_json();
                match (&common.out, count) {
                    (Some(dir), c) if *c > 1 => {
                        fs::create_dir_all(dir)?;
                        emit(Some(&dir.join(format!("instance-{seed}.json"))), &body)?;
                    }
                    (out, _) => emit(out.as_deref(), &body)?,
                }
            }
            Ok(true)
        }
        Command::Run { inputs } => {
            let (config, base) = batch_config(common, inputs)?;
            let result = run_batch(&config, &base);
            if let Some(dir) = &common.out {
                write_outputs(&result, dir)?;
            }
            for r in result.reports.iter().filter(|r| !r.succeeded()) {
                let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
                eprintln!(
                    "instance {} ({}): failed {:?} {}",
                    r.index,
                    r.source,
                    failed,
                    r.error.as_deref().unwrap_or("")
                );
            }
            println!("{}", serde_json::to_string_pretty(&result.summary)?);
            Ok(result.summary.all_passed)
        }
        Command::Audit { instance, grid } => {
            let (inst, _) = load_instance(instance)?;
            let report = audit_truthfulness(&inst, &common.mechanism(), *grid)?;
            emit(common.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
            Ok(report.passed)
        }
        Command::DemoAppendixG => demo(common),
        Command::Props { cases } => {
            let results = run_properties(common.seed, *cases, &common.mechanism().solver)?;
            let mut ok = true;
            for r in &results {
                println!(
                    "{:<22} {:>4} cases  {:>3} failures  worst slack {:.3e}  {}",
                    r.name,
                    r.cases,
                    r.failures,
                    r.worst_slack,
                    if r.passed() { "PASS" } else { "FAIL" }
                );
                ok &= r.passed();
            }
            if let Some(out) = &common.out {
                fs::write(out, serde_json::to_string_pretty(&results)? + "\n")?;
            }
            Ok(ok)
        }
    }
}

/// A single JSON argument with `instances` or `sweeps` is a batch config;
/// anything else is a list of instance files.
fn batch_config(common: &Common, inputs: &[PathBuf]) -> anyhow::Result<(BatchConfig, PathBuf)> {
    if let [single] = inputs {
        let text = fs::read_to_string(single).with_context(|| format!("reading {}", single.display()))?;
        let json: serde_json::Value =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", single.display()))?;
        if json.get("instances").is_some() || json.get("sweeps").is_some() {
            let config: BatchConfig =
                serde_json::from_value(json).with_context(|| format!("batch config {}", single.display()))?;
            let base = single.parent().map(Path::to_path_buf).unwrap_or_default();
            return Ok((config, base));
        }
    }
    let config = BatchConfig {
        delta: common.delta,
        epsilon: common.eps,
        pay_tol: common.pay_tol,
        oracle: common.oracle,
        instances: inputs.iter().map(|p| InstanceSource::File { file: p.clone() }).collect(),
        sweeps: Vec::new(),
    };
    Ok((config, PathBuf::new()))
}

fn demo(common: &Common) -> anyhow::Result<bool> {
    let demo = non_monotonicity_demo();
    println!("{:<24} {:>8} {:>10}  agrees", "quantity", "quoted", "computed");
    for q in &demo.numerics {
        println!("{:<24} {:>8.3} {:>10.6}  {}", q.label, q.quoted, q.computed, if q.agrees() { "yes" } else { "NO" });
    }
    println!("full-information greedy at true costs:     {:?}", demo.allocation_true);
    println!(
        "full-information greedy with c{} = {}:      {:?}",
        demo.agent + 1,
        demo.lowered_cost,
        demo.allocation_lowered
    );
    println!("agent {} loses by lowering its cost: {}", demo.agent + 1, demo.allocation_flips());
    let out = run_mechanism(&demo.instance, &common.mechanism())?;
    println!(
        "mechanism: branch {}, allocated {:?}, payments {:?} (OPT' = {:.4}, C·V(i*) = {:.4})",
        out.branch(),
        out.allocated(),
        out.payments,
        out.allocation.opt_minus_istar,
        out.allocation.c_vstar
    );
    Ok(demo.allocation_flips()
        && demo.mismatches().next().is_none()
        && out.invariant_violations(&demo.instance).is_empty())
}
