//! `allee-rds`: analyze, certify and simulate two-map Allee systems from a JSON
//! description.
//!
//! Exit codes: 0 success, 1 a certificate with a failing hypothesis, 2 bad
//! flags or configuration, 3 a map that is not an Allee map, 4 an estimate
//! with every trial censored.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use allee_core::certify::{self, Theorem, Verdict};
use allee_core::maps::{self, MapSpec};
use allee_core::montecarlo::{self, HorizonPolicy};
use allee_core::rds::{self, RdsConfig};
use allee_core::{Error, SystemConfigFile};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

const VALIDATION_GRID: usize = 10_000;

#[derive(Parser, Debug)]
#[command(name = "allee-rds", version, about = "Random dynamical systems generated by two Allee maps")]
struct Cli {
    /// System description (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every randomized command.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Override the switching probability from the config file.
    #[arg(long, global = true)]
    p: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fixed points, critical points, axiom checks and the landmark ordering.
    Analyze,
    /// Check the hypotheses of one of the results T1..T5.
    Certify(CertifyArgs),
    /// One trajectory as CSV.
    Simulate(SimulateArgs),
    /// Extinction/survival probabilities, or the mean first-passage time.
    Estimate(EstimateArgs),
    /// Mean first-passage time below min(A_f, A_g) over a grid of p.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    theorem: String,
    /// Noise half-width for T2/T5 (defaults to the configured perturbation).
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    x0: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    x0: f64,
    /// Defaults to 10000 for probabilities and 2000 for hitting times.
    #[arg(long)]
    n_trials: Option<u64>,
    /// Estimate the mean first-passage time instead of the probabilities.
    #[arg(long)]
    hitting: bool,
    /// Hitting threshold (defaults to min(A_f, A_g)).
    #[arg(long, requires = "hitting")]
    threshold: Option<f64>,
    /// Steps after which a hitting trial is censored.
    #[arg(long, default_value_t = montecarlo::DEFAULT_HITTING_CAP)]
    cap: u64,
    /// First horizon of the doubling schedule.
    #[arg(long, default_value_t = HorizonPolicy::default().start)]
    horizon: u64,
    /// Largest horizon of the doubling schedule.
    #[arg(long, default_value_t = HorizonPolicy::default().max)]
    max_horizon: u64,
    /// Stop doubling once the undecided fraction is below this (0: none left).
    #[arg(long, default_value_t = HorizonPolicy::default().undecided_tolerance)]
    undecided_tolerance: f64,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated, strictly increasing probabilities in (0, 1).
    #[arg(long, value_delimiter = ',', required = true)]
    p_grid: Vec<f64>,
    #[arg(long)]
    x0: f64,
    #[arg(long, default_value_t = montecarlo::DEFAULT_SWEEP_TRIALS)]
    n_trials: u64,
    #[arg(long, default_value_t = montecarlo::DEFAULT_HITTING_CAP)]
    cap: u64,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NotAnAlleeMap(_) | Error::NotUnimodal(_) => 3,
            Error::EstimateUnavailable { .. } => 4,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult<u8> {
    configure_threads()?;
    let path = cli.config.as_deref().ok_or_else(|| Failure::usage("--config PATH is required"))?;
    let config = load_config(path, cli.p)?;
    let resolved =
        serde_json::to_value(SystemConfigFile::resolved(&config)?).map_err(|e| Failure::usage(e.to_string()))?;
    match &cli.command {
        Command::Analyze => analyze(&cli, &config, resolved),
        Command::Certify(args) => certify_cmd(&cli, &config, resolved, args),
        Command::Simulate(args) => simulate(&cli, &config, resolved, args),
        Command::Estimate(args) => estimate(&cli, &config, resolved, args),
        Command::Sweep(args) => sweep(&cli, &config, resolved, args),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("ALLEE_RDS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("ALLEE_RDS_THREADS must be a non-negative integer, got `{raw}`")))?;
    // 0 leaves the pool at its default size
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::usage(e.to_string()))?;
    }
    Ok(())
}

fn load_config(path: &Path, p: Option<f64>) -> CliResult<RdsConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut file =
        SystemConfigFile::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if let Some(p) = p {
        file.p = p;
    }
    for (name, spec) in [("f", &file.f), ("g", &file.g)] {
        let spec = match file.b {
            Some(b) => spec.clone().with_bound(b)?,
            None => spec.clone(),
        };
        check_allee(name, &spec)?;
    }
    Ok(file.build()?)
}

fn check_allee(name: &str, spec: &MapSpec) -> CliResult<()> {
    let report = maps::validate_allee(spec, VALIDATION_GRID)?;
    if let Some(fail) = report.first_failure() {
        let mut message = format!("map {name} fails the Allee axiom \"{}\"", fail.axiom);
        if let Some(note) = &fail.note {
            let _ = write!(message, ": {note}");
        }
        if let Some(v) = fail.worst {
            let _ = write!(message, " (worst grid point x = {}, f(x) = {})", v.x, v.fx);
        }
        return Err(Failure { code: 3, message });
    }
    Ok(())
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(cli: &Cli, doc: &Value) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Failure::usage(e.to_string()))?;
    text.push('\n');
    emit(cli, &text)
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result types are serializable")
}

fn json_only(cli: &Cli, command: &str) -> CliResult<()> {
    if cli.format == Format::Csv {
        return Err(Failure::usage(format!("{command} has no CSV output; use --format json")));
    }
    Ok(())
}

fn analyze(cli: &Cli, config: &RdsConfig, resolved: Value) -> CliResult<u8> {
    json_only(cli, "analyze")?;
    let validate = |m: &MapSpec| maps::validate_allee(m, VALIDATION_GRID);
    let ordering = certify::classify_ordering(config.features_f(), config.features_g());
    let doc = json!({
        "command": "analyze",
        "config": resolved,
        "f": { "features": to_value(config.features_f()), "validation": to_value(&validate(config.f())?) },
        "g": { "features": to_value(config.features_g()), "validation": to_value(&validate(config.g())?) },
        "ordering": to_value(&ordering),
        "critical_value": config.critical_value(),
    });
    emit_json(cli, &doc)?;
    Ok(0)
}

fn certify_cmd(cli: &Cli, config: &RdsConfig, resolved: Value, args: &CertifyArgs) -> CliResult<u8> {
    json_only(cli, "certify")?;
    let theorem: Theorem = args.theorem.parse()?;
    let delta = args.delta.or(config.perturbation().map(|p| p.delta));
    let report = certify::certify(theorem, config.f(), config.g(), delta)?;
    let doc = json!({ "command": "certify", "config": resolved, "report": to_value(&report) });
    emit_json(cli, &doc)?;
    Ok(if report.verdict == Verdict::AllHold { 0 } else { 1 })
}

fn simulate(cli: &Cli, config: &RdsConfig, resolved: Value, args: &SimulateArgs) -> CliResult<u8> {
    let traj = rds::simulate(config, args.x0, cli.seed, args.steps)?;
    let summary = format!(
        "outcome: {} (from step {}), x0 = {}, steps = {}, seed = {}",
        to_value(&traj.outcome.kind).as_str().unwrap_or("?"),
        traj.outcome.step,
        args.x0,
        args.steps,
        cli.seed
    );
    match cli.format {
        Format::Csv => emit(cli, &traj.to_csv())?,
        Format::Json => {
            emit_json(cli, &json!({ "command": "simulate", "config": resolved, "trajectory": to_value(&traj) }))?
        }
    }
    eprintln!("{summary}");
    Ok(0)
}

fn estimate(cli: &Cli, config: &RdsConfig, resolved: Value, args: &EstimateArgs) -> CliResult<u8> {
    if args.hitting {
        let n = args.n_trials.unwrap_or(montecarlo::DEFAULT_SWEEP_TRIALS);
        let threshold = args.threshold.unwrap_or(config.critical_value());
        eprintln!("estimating the first-passage time below {threshold} over {n} trials");
        let est = montecarlo::estimate_hitting_time(config, args.x0, threshold, n, args.cap, cli.seed)?;
        match cli.format {
            Format::Csv => {
                let text = format!(
                    "x0,threshold,estimate,ci_low,ci_high,n_trials,n_censored,seed,cap\n{},{},{},{},{},{},{},{},{}\n",
                    args.x0,
                    threshold,
                    est.estimate,
                    est.ci_low,
                    est.ci_high,
                    est.n_trials,
                    est.n_undecided,
                    est.seed,
                    est.horizon
                );
                emit(cli, &text)?;
            }
            Format::Json => emit_json(
                cli,
                &json!({ "command": "estimate", "config": resolved, "x0": args.x0, "threshold": threshold, "hitting_time": to_value(&est) }),
            )?,
        }
        return Ok(0);
    }
    let n = args.n_trials.unwrap_or(montecarlo::DEFAULT_PROPORTION_TRIALS);
    let policy =
        HorizonPolicy { start: args.horizon, max: args.max_horizon, undecided_tolerance: args.undecided_tolerance };
    eprintln!("estimating absorption probabilities over {n} trials");
    let est = montecarlo::estimate_absorption(config, args.x0, n, policy, cli.seed)?;
    eprintln!("final horizon {} steps, {} undecided", est.horizon, est.tally.undecided);
    match cli.format {
        Format::Csv => {
            let mut text = String::from("x0,quantity,estimate,ci_low,ci_high,n_trials,n_undecided,seed,horizon\n");
            for (name, e) in [("p0", &est.p0), ("p1", &est.p1)] {
                let _ = writeln!(
                    text,
                    "{},{name},{},{},{},{},{},{},{}",
                    args.x0, e.estimate, e.ci_low, e.ci_high, e.n_trials, e.n_undecided, e.seed, e.horizon
                );
            }
            emit(cli, &text)?;
        }
        Format::Json => emit_json(
            cli,
            &json!({ "command": "estimate", "config": resolved, "x0": args.x0, "absorption": to_value(&est) }),
        )?,
    }
    Ok(0)
}

fn sweep(cli: &Cli, config: &RdsConfig, resolved: Value, args: &SweepArgs) -> CliResult<u8> {
    eprintln!("sweeping {} values of p with {} trials each", args.p_grid.len(), args.n_trials);
    let result = montecarlo::sweep_config(config, &args.p_grid, args.x0, args.n_trials, args.cap, cli.seed)?;
    for v in &result.values {
        match &v.estimate {
            Some(e) => eprintln!("p = {}: T = {} ({} censored)", v.p, e.estimate, v.n_censored),
            None => eprintln!("p = {}: unavailable ({} censored)", v.p, v.n_censored),
        }
    }
    match cli.format {
        Format::Csv => emit(cli, &result.to_csv())?,
        Format::Json => emit_json(cli, &json!({ "command": "sweep", "config": resolved, "sweep": to_value(&result) }))?,
    }
    if result.all_unavailable() {
        return Err(Failure { code: 4, message: "every grid point was fully censored".into() });
    }
    Ok(0)
}
