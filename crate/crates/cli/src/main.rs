//! `congested` — run congested-bandit experiments from JSON configs.
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid config or instance,
//! 3 I/O failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use congested_bandits::harness::check::check_suite;
use congested_bandits::harness::config::{config_base_dir, CheckSpec};
use congested_bandits::harness::experiment::{run_experiment, run_oracle, ExperimentOutput, RunOptions};
use congested_bandits::harness::trace::mean_std;
use congested_bandits::harness::{ExperimentConfig, Mode};
use congested_bandits::par::Execution;
use congested_bandits::Error;

#[derive(Parser)]
#[command(name = "congested", version, about = "Congested bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multi-armed experiment (config mode `mab`).
    RunMab(RunArgs),
    /// Routing experiment over s-t paths (config mode `st`).
    RunSt(RunArgs),
    /// Linear contextual experiment (config mode `cb-known` or `cb-stochastic`).
    RunCb(RunArgs),
    /// Exact planning answers for the configured instance.
    Oracle(RunArgs),
    /// Oracle self-checks; prints a JSON report.
    Check(CheckArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Maximum concurrent replications; 1 runs sequentially.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Base seed (overrides `replications.base_seed`).
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
    /// Thin logged time points past step 1000.
    #[arg(long, overrides_with = "no_thin")]
    thin: bool,
    /// Log every time point.
    #[arg(long = "no-thin", overrides_with = "thin")]
    no_thin: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Config with mode `check`; defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write `check_report.json` here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_name = "S")]
    seed: Option<u64>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Csv(_) => 3,
        _ => 2,
    }
}

fn load(args: &RunArgs, allowed: &[Mode]) -> Result<(ExperimentConfig, Vec<u8>, RunOptions), Error> {
    let (cfg, bytes) = ExperimentConfig::from_path(&args.config)?;
    if !allowed.contains(&cfg.mode) {
        let names: Vec<&str> = allowed.iter().map(|m| m.as_str()).collect();
        return Err(Error::Config(format!(
            "config mode is {}, this command expects {}",
            cfg.mode.as_str(),
            names.join(" or ")
        )));
    }
    if args.jobs == Some(0) {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    let thin = match (args.thin, args.no_thin) {
        (true, _) => Some(true),
        (_, true) => Some(false),
        _ => None,
    };
    let opts = RunOptions {
        out: args.out.clone(),
        execution: Execution::from_jobs(args.jobs),
        seed: args.seed,
        thin,
        base_dir: config_base_dir(&args.config),
    };
    Ok((cfg, bytes, opts))
}

fn summarize(out: &ExperimentOutput, dir: Option<&Path>) {
    for w in &out.windows {
        println!("window {}:", w.window);
        for (i, (name, _)) in w.reps[0].traces.iter().enumerate() {
            let finals: Vec<f64> = w
                .reps
                .iter()
                .map(|r| {
                    let tr = &r.traces[i].1;
                    tr.avg_regret_mean(tr.len())
                })
                .collect();
            let (mean, std) = mean_std(&finals);
            println!("  {name:<10} final avg regret {mean:.6} (std {std:.6}, {} reps)", finals.len());
        }
    }
    if let Some(d) = dir {
        println!("wrote {}", d.display());
    }
}

fn run(args: RunArgs, allowed: &[Mode]) -> Result<u8, Error> {
    let (cfg, bytes, opts) = load(&args, allowed)?;
    let out = run_experiment(&cfg, &bytes, &opts)?;
    let dir = opts.out.clone().or(cfg.output.as_ref().map(PathBuf::from));
    summarize(&out, dir.as_deref());
    Ok(0)
}

fn oracle(args: RunArgs) -> Result<u8, Error> {
    let (cfg, _, opts) = load(&args, &[Mode::Oracle])?;
    let reports = run_oracle(&cfg, &opts)?;
    println!("{}", serde_json::to_string_pretty(&reports)?);
    Ok(0)
}

fn check(args: CheckArgs) -> Result<u8, Error> {
    let mut spec = match &args.config {
        Some(path) => {
            let (cfg, _) = ExperimentConfig::from_path(path)?;
            if cfg.mode != Mode::Check {
                return Err(Error::Config(format!("config mode is {}, expected check", cfg.mode.as_str())));
            }
            cfg.check.unwrap_or_default()
        }
        None => CheckSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let report = check_suite(&spec);
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let path = dir.join("check_report.json");
        std::fs::write(&path, json + "\n").map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    Ok(if report.passed { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RunMab(a) => run(a, &[Mode::Mab]),
        Command::RunSt(a) => run(a, &[Mode::St]),
        Command::RunCb(a) => run(a, &[Mode::CbKnown, Mode::CbStochastic]),
        Command::Oracle(a) => oracle(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
