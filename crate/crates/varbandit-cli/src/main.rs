//! Command-line front end for the experiment harness.
//!
//! Subcommands `regret`, `bai`, `bounds --config`, and `casestudy` load a
//! JSON experiment config, apply `--override key=value` edits (dotted
//! paths, values parsed as JSON), re-validate, run, and write results into
//! the output directory. `bounds --name ...` evaluates a closed-form bound
//! from flags and prints one JSON line. `validate-config` checks a config
//! without running anything.
//!
//! Exit codes: 0 success; 2 invalid config/arguments; 3 infeasible budget;
//! 4 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use varbandit::bounds::{
    complexity_h2, sharpe_concentration_bound, shvv_error_bound_from_h2, shvv_round_error_bound,
    subgauss_variance_bound, ucb_sharpe_regret_bound, ucb_vv_regret_bound,
    variance_concentration_bound, ProblemInstance, SharpeBoundForm, DEFAULT_SHARPE_C,
    DEFAULT_SUBGAUSS_C,
};
use varbandit::harness::{
    run_bai_experiment, run_bound_sweep, run_case_study, run_regret_experiment, ExperimentSpec,
    HarnessError, OutputFiles,
};

#[derive(Parser)]
#[command(
    name = "varbandit",
    version,
    about = "Variance-targeting bandit experiments, bound calculators, and the option-trading case study"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the config-driven subcommands.
#[derive(Args)]
struct RunArgs {
    /// Experiment config file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Config override as a dotted path, e.g. `replications=50`,
    /// `policies.0.epsilon=0.2`, or `arms.k_values=[16,32]`. The value is
    /// parsed as JSON when possible, else taken as a string. Repeatable;
    /// the edited config is re-validated.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to the config's `output` field.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// Closed-form bound to evaluate: variance_concentration,
    /// ucb_vv_regret, h2, shvv_error, shvv_round_error, subgauss_variance,
    /// sharpe_concentration, or ucb_sharpe_regret.
    #[arg(long, conflicts_with = "config")]
    name: Option<String>,
    /// Run a Monte Carlo bound sweep from a `bound_sweep` config instead.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Number of arms.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Horizon or pull budget.
    #[arg(long)]
    n: Option<u64>,
    /// Problem complexity (sum over suboptimal arms of rank over squared
    /// gap).
    #[arg(long)]
    h2: Option<f64>,
    /// Variance deviation threshold.
    #[arg(long)]
    eps: Option<f64>,
    /// Sharpe deviation threshold.
    #[arg(long)]
    eta: Option<f64>,
    /// Support lower end.
    #[arg(long)]
    l: Option<f64>,
    /// Support upper end.
    #[arg(long)]
    u: Option<f64>,
    /// Sub-Gaussian variance proxy.
    #[arg(long)]
    v2: Option<f64>,
    /// Exploration/concentration scale constant.
    #[arg(long)]
    c: Option<f64>,
    /// Halving round index (0-based).
    #[arg(long)]
    r: Option<u32>,
    /// Single variance gap (round error bound).
    #[arg(long)]
    gap: Option<f64>,
    /// Comma-separated variance gaps, exactly one of them zero.
    #[arg(long, value_delimiter = ',')]
    gaps: Option<Vec<f64>>,
    /// Sharpe regret bound form: statement or proof.
    #[arg(long, default_value = "statement")]
    form: String,
}

#[derive(Args)]
struct ValidateArgs {
    /// Experiment config file (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

// One `Command` exists per process, so the size spread between variants
// (the bounds calculator carries many optional flags) costs nothing.
#[allow(clippy::large_enum_variant)]
#[derive(Subcommand)]
enum Command {
    /// Run a regret-minimization experiment.
    Regret(RunArgs),
    /// Run a fixed-budget best-variance-arm identification experiment.
    Bai(RunArgs),
    /// Evaluate a closed-form bound, or run a Monte Carlo bound sweep.
    Bounds(BoundsArgs),
    /// Run the two-stage option-trading case study.
    Casestudy(RunArgs),
    /// Parse and validate a config without running it.
    ValidateConfig(ValidateArgs),
}

fn invalid(msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::InvalidConfig(msg.to_string())
}

/// Apply one `key=value` override to a JSON config. Dots split the path;
/// integer segments index arrays; the final segment is inserted (objects)
/// or replaced (arrays).
fn apply_override(value: &mut serde_json::Value, item: &str) -> Result<(), HarnessError> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| invalid(format!("override {item:?} must look like key=value")))?;
    if path.is_empty() {
        return Err(invalid(format!("override {item:?} has an empty key")));
    }
    let parsed: serde_json::Value =
        serde_json::from_str(raw).unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let segments: Vec<&str> = path.split('.').collect();
    let mut cursor = value;
    for (i, segment) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        if let Ok(index) = segment.parse::<usize>() {
            let array = cursor.as_array_mut().ok_or_else(|| {
                invalid(format!("override {path:?}: segment {segment:?} indexes a non-array"))
            })?;
            if index >= array.len() {
                return Err(invalid(format!(
                    "override {path:?}: index {index} is out of bounds (len {})",
                    array.len()
                )));
            }
            if last {
                array[index] = parsed;
                return Ok(());
            }
            cursor = &mut array[index];
        } else {
            let object = cursor.as_object_mut().ok_or_else(|| {
                invalid(format!("override {path:?}: segment {segment:?} indexes a non-object"))
            })?;
            if last {
                object.insert(segment.to_string(), parsed);
                return Ok(());
            }
            cursor = object
                .entry(segment.to_string())
                .or_insert_with(|| serde_json::Value::Object(Default::default()));
        }
    }
    Ok(())
}

/// Load a config file, apply overrides, and validate.
fn load_spec(
    config: &std::path::Path,
    overrides: &[String],
) -> Result<ExperimentSpec, HarnessError> {
    let text = std::fs::read_to_string(config)?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| invalid(format!("{}: malformed JSON: {e}", config.display())))?;
    for item in overrides {
        apply_override(&mut value, item)?;
    }
    ExperimentSpec::from_json_value(value)
}

fn expect_kind(spec: ExperimentSpec, want: &str) -> Result<ExperimentSpec, HarnessError> {
    if spec.kind() == want {
        Ok(spec)
    } else {
        Err(invalid(format!(
            "this subcommand runs {want:?} configs, but the file has kind {:?}",
            spec.kind()
        )))
    }
}

fn resolve_out_dir(flag: Option<PathBuf>, spec: &ExperimentSpec) -> Result<PathBuf, HarnessError> {
    flag.or_else(|| spec.output().cloned()).ok_or_else(|| {
        invalid("no output directory: pass --out-dir or set \"output\" in the config")
    })
}

fn report_written(files: &OutputFiles) {
    println!("wrote {}", files.resolved_config.display());
    println!("wrote {}", files.config_hash.display());
    println!("wrote {}", files.summary.display());
    for table in &files.tables {
        println!("wrote {}", table.display());
    }
}

/// A required flag for the selected bound.
fn need<T: Copy>(value: Option<T>, flag: &str, bound: &str) -> Result<T, HarnessError> {
    value.ok_or_else(|| invalid(format!("bound {bound:?} needs --{flag}")))
}

fn instance_from_gaps(
    gaps: Option<Vec<f64>>,
    n: u64,
    bound: &str,
    support: Option<(f64, f64)>,
) -> Result<ProblemInstance, HarnessError> {
    let gaps = gaps.ok_or_else(|| invalid(format!("bound {bound:?} needs --gaps")))?;
    Ok(ProblemInstance::new(gaps, support, None, n)?)
}

fn run_bounds_flags(args: BoundsArgs) -> Result<(), HarnessError> {
    let name =
        args.name.as_deref().ok_or_else(|| invalid("bounds needs either --name or --config"))?;
    let line = match name {
        "variance_concentration" => {
            let b = variance_concentration_bound(
                need(args.n, "n", name)?,
                need(args.eps, "eps", name)?,
                need(args.l, "l", name)?,
                need(args.u, "u", name)?,
            )?;
            serde_json::json!({"name": name, "value": b.value, "vacuous": b.vacuous})
        }
        "ucb_vv_regret" => {
            let n = need(args.n, "n", name)?;
            let instance = instance_from_gaps(args.gaps, n, name, Some((0.0, 1.0)))?;
            let value = ucb_vv_regret_bound(&instance)?;
            serde_json::json!({"name": name, "value": value})
        }
        "h2" => {
            // The horizon does not enter the complexity; any valid value
            // satisfies the instance constructor.
            let instance = instance_from_gaps(args.gaps, args.n.unwrap_or(1), name, None)?;
            let value = complexity_h2(&instance)?;
            serde_json::json!({"name": name, "value": value})
        }
        "shvv_error" => {
            let b = shvv_error_bound_from_h2(
                need(args.k, "K", name)?,
                need(args.n, "n", name)?,
                need(args.h2, "h2", name)?,
            )?;
            serde_json::json!({"name": name, "value": b.value, "vacuous": b.vacuous})
        }
        "shvv_round_error" => {
            let b = shvv_round_error_bound(
                need(args.k, "K", name)?,
                need(args.n, "n", name)?,
                need(args.r, "r", name)?,
                need(args.gap, "gap", name)?,
            )?;
            serde_json::json!({"name": name, "value": b.value, "vacuous": b.vacuous})
        }
        "subgauss_variance" => {
            let b = subgauss_variance_bound(
                need(args.n, "n", name)?,
                need(args.eps, "eps", name)?,
                need(args.v2, "v2", name)?,
                args.c.unwrap_or(DEFAULT_SUBGAUSS_C),
            )?;
            serde_json::json!({"name": name, "value": b.value, "vacuous": b.vacuous})
        }
        "sharpe_concentration" => {
            let b = sharpe_concentration_bound(
                need(args.n, "n", name)?,
                need(args.eta, "eta", name)?,
                args.c.unwrap_or(DEFAULT_SHARPE_C),
            )?;
            serde_json::json!({"name": name, "value": b.value, "vacuous": b.vacuous})
        }
        "ucb_sharpe_regret" => {
            let n = need(args.n, "n", name)?;
            let form = match args.form.as_str() {
                "statement" => SharpeBoundForm::Statement,
                "proof" => SharpeBoundForm::Proof,
                other => {
                    return Err(invalid(format!(
                        "unknown --form {other:?}, expected statement or proof"
                    )))
                }
            };
            let instance = instance_from_gaps(args.gaps, n, name, None)?;
            let value = ucb_sharpe_regret_bound(&instance, args.c.unwrap_or(1.0), form)?;
            serde_json::json!({"name": name, "value": value, "form": args.form})
        }
        other => return Err(invalid(format!("unknown bound {other:?}; see --help for the list"))),
    };
    println!("{line}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Regret(args) => {
            let spec = expect_kind(load_spec(&args.config, &args.overrides)?, "regret")?;
            let out_dir = resolve_out_dir(args.out_dir, &spec)?;
            let ExperimentSpec::Regret(config) = spec else { unreachable!() };
            let outcome = run_regret_experiment(&config)?;
            report_written(&outcome.write(&out_dir)?);
            Ok(())
        }
        Command::Bai(args) => {
            let spec = expect_kind(load_spec(&args.config, &args.overrides)?, "bai")?;
            let out_dir = resolve_out_dir(args.out_dir, &spec)?;
            let ExperimentSpec::Bai(config) = spec else { unreachable!() };
            let outcome = run_bai_experiment(&config)?;
            report_written(&outcome.write(&out_dir)?);
            Ok(())
        }
        Command::Casestudy(args) => {
            let spec = expect_kind(load_spec(&args.config, &args.overrides)?, "case_study")?;
            let out_dir = resolve_out_dir(args.out_dir, &spec)?;
            let ExperimentSpec::CaseStudy(config) = spec else { unreachable!() };
            let outcome = run_case_study(&config)?;
            report_written(&outcome.write(&out_dir)?);
            Ok(())
        }
        Command::Bounds(args) => {
            if let Some(config_path) = &args.config {
                let spec = expect_kind(load_spec(config_path, &args.overrides)?, "bound_sweep")?;
                let out_dir = resolve_out_dir(args.out_dir.clone(), &spec)?;
                let ExperimentSpec::BoundSweep(config) = spec else { unreachable!() };
                let outcome = run_bound_sweep(&config)?;
                report_written(&outcome.write(&out_dir)?);
                Ok(())
            } else {
                run_bounds_flags(args)
            }
        }
        Command::ValidateConfig(args) => {
            let spec = load_spec(&args.config, &args.overrides)?;
            println!("ok: valid {} config", spec.kind());
            Ok(())
        }
    }
}

fn exit_code(err: &HarnessError) -> u8 {
    match err {
        HarnessError::InvalidConfig(_) => 2,
        HarnessError::InfeasibleBudget(_) => 3,
        HarnessError::Io(_) => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
