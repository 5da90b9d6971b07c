use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spendchain::cli::{run_experiment, write_outputs, Command, ConfigError, RunError, SimConfig};

#[derive(Parser)]
#[command(name = "spendchain", version, about = "Proof-of-spending chain growth experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time to find one block at a fixed spending statistic
    BlockTime(RunArgs),
    /// One party building a chain alone
    ChainBuild(RunArgs),
    /// Honest chain against a private adversary fork
    Race(RunArgs),
    /// Steady-state earnings of the self-spending adversary (PRS/RSO)
    EarningRate(RunArgs),
    /// Solo build until the spend plan can no longer be funded
    Sustainability(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory for the CSV and summary files
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn load(args: &RunArgs) -> Result<SimConfig, RunError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| ConfigError::new("config", format!("{}: {e}", args.config.display())))?;
    let mut cfg = SimConfig::from_json(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(command: Command, args: &RunArgs) -> Result<i32, RunError> {
    let cfg = load(args)?;
    let out = run_experiment(&cfg, command)?;
    let (csv, summary) = write_outputs(&out, &args.out)?;
    for r in &out.records {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| x.to_string());
        println!(
            "{:<24} empirical={:<22} theoretical={:<22} rel_err={}",
            r.metric,
            fmt(r.empirical),
            fmt(r.theoretical),
            fmt(r.relative_error)
        );
    }
    if command == Command::Sustainability {
        match out.details.get("failure_height").and_then(|v| v.as_u64()) {
            Some(h) => println!("strategy infeasible at height {h}"),
            None => println!("strategy sustained for {} blocks", cfg.length),
        }
    } else if out.infeasible {
        eprintln!("strategy infeasible in at least one trial");
    }
    println!("wrote {} and {}", csv.display(), summary.display());
    Ok(out.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::BlockTime(a) => (Command::BlockTime, a),
        Cmd::ChainBuild(a) => (Command::ChainBuild, a),
        Cmd::Race(a) => (Command::Race, a),
        Cmd::EarningRate(a) => (Command::EarningRate, a),
        Cmd::Sustainability(a) => (Command::Sustainability, a),
    };
    match run(command, args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
