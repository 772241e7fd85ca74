use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lado::battery::{
    canonicalize, direct_cost, recover_soc, schedule_to_actions, simulate_soc, synthetic_traces,
    write_demand_trace, write_weather_trace,
};
use lado::bounds::{bound_blackbox, default_lambda_grid, illustration_curves, BoundInputs};
use lado::harness::{
    audit_robustness, emit_tables, metrics, write_curve, EpisodeSource, RosterEntry, RunConfig, Scenario,
};
use lado::policies::{format_float, write_predictions, PolicyKind, PredictionSet};
use lado::{global_cost, run_batch, solve_opt, LadoError, Trajectory};

#[derive(Parser)]
#[command(name = "lado", version, about = "Learning-augmented decentralized online optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch and write result tables.
    Run(RunArgs),
    /// Run LADO and check the robustness guarantee on every episode.
    Audit(RunArgs),
    /// Evaluate the average-cost bounds.
    Bounds(BoundsArgs),
    /// Write synthetic demand and weather traces.
    GenTraces(GenTracesArgs),
    /// Compare battery costs computed directly and through the canonical form.
    CanonicalizeCheck(CanonicalizeArgs),
    /// Solve the offline optimum of each episode.
    Opt(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `synthetic-random` or `battery`.
    #[arg(long, value_parser = parse_scenario)]
    scenario: Option<Scenario>,
    /// Comma-separated robustness levels.
    #[arg(long = "lambda", value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `perturbed:<sigma>`, `adversarial[:lo:hi]`, `expert`, `greedy`, `hitonly` or `file:<path>`.
    #[arg(long, value_parser = parse_ml)]
    ml: Option<PolicyKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recompute every LADO constraint from scratch during simulation.
    #[arg(long)]
    verify_ledger: bool,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long = "lambda", value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Evaluate the black-box bound for these inputs instead of writing the illustration curves.
    #[arg(long, requires_all = ["avg_ml", "scale", "omega"])]
    avg_expert: Option<f64>,
    #[arg(long)]
    avg_ml: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    /// Use `inf` for an unbounded distance term.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenTracesArgs {
    #[arg(long, default_value_t = 1440)]
    hours: usize,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CanonicalizeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    match s {
        "synthetic-random" => Ok(Scenario::SyntheticRandom),
        "battery" => Ok(Scenario::Battery),
        _ => Err(format!("unknown scenario '{s}'")),
    }
}

fn parse_ml(s: &str) -> Result<PolicyKind, String> {
    s.parse().map_err(|e: LadoError| e.to_string())
}

impl RunArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.scenario {
            config.scenario = s;
        }
        if let Some(l) = &self.lambdas {
            config.lambdas = l.clone();
        }
        if let Some(e) = self.episodes {
            config.episodes = e;
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if let Some(ml) = &self.ml {
            config.ml = ml.clone();
        }
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        config.verify_ledger |= self.verify_ledger;
        config.validate()?;
        Ok(config)
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let config = args.load()?;
    let batch = run_batch(&config)?;
    let written = emit_tables(&batch, &[], &config.out)?;
    info!("wrote {} tables to {}", written.len(), config.out.display());
    println!("policy,avg,cr");
    for m in metrics(&batch)? {
        println!("{},{},{}", m.policy, format_float(m.avg), m.cr.map(format_float).unwrap_or_default());
    }
    Ok(())
}

fn audit(args: &RunArgs) -> Result<()> {
    let mut config = args.load()?;
    config.roster = vec![RosterEntry::Expert, RosterEntry::Lado];
    config.verify_ledger = true;
    let batch = run_batch(&config)?;
    println!("lambda,episodes,max_ratio,ratio_violations,slack_violations,worst_slack");
    let mut failed = Vec::new();
    for &lambda in &config.lambdas {
        let a = audit_robustness(&batch, lambda)?;
        println!(
            "{},{},{},{},{},{}",
            format_float(lambda),
            a.episodes,
            format_float(a.max_ratio),
            a.ratio_violations,
            a.slack_violations,
            format_float(a.worst_slack)
        );
        if !a.passed() {
            failed.push(format_float(lambda));
        }
    }
    if !failed.is_empty() {
        bail!(AuditFailure(failed.join(",")));
    }
    Ok(())
}

#[derive(Debug)]
struct AuditFailure(String);

impl std::fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "robustness audit failed for lambda {}", self.0)
    }
}

impl std::error::Error for AuditFailure {}

fn bounds(args: &BoundsArgs) -> Result<()> {
    let lambdas = args.lambdas.clone().unwrap_or_else(default_lambda_grid);
    if let (Some(avg_expert), Some(avg_ml), Some(scale), Some(omega)) =
        (args.avg_expert, args.avg_ml, args.scale, args.omega)
    {
        let inputs = BoundInputs { avg_expert, avg_ml, scale, omega };
        println!("lambda,bound");
        for &l in &lambdas {
            println!("{},{}", format_float(l), format_float(bound_blackbox(&inputs, l)?));
        }
        return Ok(());
    }
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    fs::create_dir_all(&out)?;
    for curve in illustration_curves(&lambdas)? {
        let path = out.join(format!("bound_{}.csv", curve.name));
        write_curve(&path, &curve)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn gen_traces(args: &GenTracesArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    let (demand, weather) = synthetic_traces(args.hours, args.seed);
    let demand_path = args.out.join("demand.csv");
    let weather_path = args.out.join("weather.csv");
    write_demand_trace(&demand, fs::File::create(&demand_path)?)?;
    write_weather_trace(&weather, fs::File::create(&weather_path)?)?;
    println!("{}", demand_path.display());
    println!("{}", weather_path.display());
    Ok(())
}

fn canonicalize_check(args: &CanonicalizeArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    config.scenario = Scenario::Battery;
    config.episodes = args.trials;
    config.validate()?;
    let params = &config.battery.params;
    let source = EpisodeSource::prepare(&config)?;
    let EpisodeSource::Battery(sequences) = &source else {
        unreachable!("battery scenario prepares battery sequences")
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut worst = 0.0f64;
    let mut worst_soc = 0.0f64;
    for trial in 0..args.trials {
        let sequence = &sequences[trial % sequences.len()];
        let w = params.disturbances(sequence);
        let xi: Vec<Vec<f64>> = w.iter().map(|wv| wv.iter().map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let soc = simulate_soc(params, &w, &xi);
        let direct = direct_cost(params, &soc, &xi)?;
        let instance = canonicalize(params, sequence)?;
        let actions: Trajectory = schedule_to_actions(params, &xi);
        let canonical = global_cost(&instance, &actions)?;
        worst = worst.max((direct - canonical).abs() / direct.abs().max(f64::MIN_POSITIVE));
        for (a, b) in soc.iter().flatten().zip(recover_soc(params, &w, &actions).iter().flatten()) {
            worst_soc = worst_soc.max((a - b).abs());
        }
    }
    println!("trials,max_relative_difference,max_soc_difference");
    println!("{},{},{}", args.trials, format_float(worst), format_float(worst_soc));
    if worst > args.tolerance {
        bail!(LadoError::InvalidArgument(format!(
            "relative cost difference {worst:e} exceeds tolerance {:e}",
            args.tolerance
        )));
    }
    Ok(())
}

fn opt(args: &RunArgs) -> Result<()> {
    let config = args.load()?;
    let source = EpisodeSource::prepare(&config)?;
    if args.out.is_some() {
        fs::create_dir_all(&config.out)?;
    }
    println!("episode,opt_cost");
    for e in 0..config.episodes {
        let instance = source.instance(&config, e)?;
        let traj = solve_opt(&instance)?;
        println!("{e},{}", format_float(global_cost(&instance, &traj)?));
        if args.out.is_some() {
            let path: &Path = &config.out.join(format!("{e}.csv"));
            write_predictions(&PredictionSet::from_trajectory(&traj), fs::File::create(path)?)?;
        }
    }
    Ok(())
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    if err.downcast_ref::<AuditFailure>().is_some() {
        return "robustness_violation";
    }
    err.chain()
        .find_map(|e| e.downcast_ref::<LadoError>())
        .map(LadoError::kind)
        .unwrap_or("error")
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Audit(a) => audit(a),
        Command::Bounds(a) => bounds(a),
        Command::GenTraces(a) => gen_traces(a),
        Command::CanonicalizeCheck(a) => canonicalize_check(a),
        Command::Opt(a) => opt(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let line = serde_json::json!({ "error": error_kind(&err), "message": format!("{err:#}") });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
