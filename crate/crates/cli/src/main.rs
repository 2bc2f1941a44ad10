use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use osclaims_cli::{Command, EngineChoice, Failure, Format, Overrides};

/// Moments of aggregate claims under order-statistic arrival processes.
#[derive(Parser)]
#[command(name = "osclaims", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// E[S(t)] on the configured grid.
    Mean(Common),
    /// E[S(t)²] on the configured grid.
    SecondMoment(Common),
    /// Var[S(t)] on the configured grid.
    Variance(Common),
    /// Monte Carlo estimates of all three moments.
    Simulate(Common),
    /// Cross-check every applicable engine against the others.
    Validate(Common),
    /// Growth ratios of the closed-form moments against their limits.
    Asymptote(Common),
}

#[derive(Args)]
struct Common {
    /// Model configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Report file (default ./report.csv or ./report.json).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Master seed for simulation, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// closed, quadrature, simulate or all.
    #[arg(long)]
    engine: Option<EngineChoice>,
    /// csv or json.
    #[arg(long)]
    format: Option<Format>,
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("OSCLAIMS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("OSCLAIMS_THREADS: expected a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("OSCLAIMS_THREADS: {e}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    let (command, common) = match cli.command {
        Sub::Mean(c) => (Command::Mean, c),
        Sub::SecondMoment(c) => (Command::SecondMoment, c),
        Sub::Variance(c) => (Command::Variance, c),
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::Validate(c) => (Command::Validate, c),
        Sub::Asymptote(c) => (Command::Asymptote, c),
    };
    let overrides = Overrides {
        output: common.output,
        seed: common.seed,
        engine: common.engine,
        format: common.format,
    };
    match osclaims_cli::run::run(command, &common.config, &overrides) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(failure) => {
            if let Failure::Validation { summary, .. } = &failure {
                println!("{summary}");
            }
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
