use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use omc::optimize::Method;
use omc::parallel::Mode;
use omc_cli::{compare, emit_outputs, execute, Algorithm, CliError, CliResult, Overrides, Settings};

#[derive(Parser)]
#[command(name = "omc", version, about = "Optimization Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one sampler and write particles, metrics and histograms.
    Run(Flags),
    /// Run several samplers over repeated seeds and tabulate SS and ESS/n.
    Compare(Flags),
}

#[derive(Args)]
struct Flags {
    /// Simulator name, e.g. unknown-mean or lotka-volterra.
    #[arg(long)]
    sim: Option<String>,
    #[arg(long, value_enum)]
    alg: Option<Algorithm>,
    /// newton, gauss-newton or random-walk.
    #[arg(long)]
    optimizer: Option<Method>,
    /// Comma-separated, strictly decreasing ε schedule.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; OMC_THREADS takes precedence.
    #[arg(long)]
    workers: Option<usize>,
    /// batch or anytime.
    #[arg(long)]
    mode: Option<Mode>,
    /// Global simulation budget (anytime and rejection).
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML file with the same keys; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl From<Flags> for Overrides {
    fn from(f: Flags) -> Self {
        Overrides {
            sim: f.sim,
            alg: f.alg,
            optimizer: f.optimizer,
            eps: f.eps,
            n: f.n,
            seed: f.seed,
            workers: f.workers,
            mode: f.mode,
            budget: f.budget,
            out: f.out,
            config: f.config,
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let threads = std::env::var("OMC_THREADS").ok();
    match cli.command {
        Command::Run(flags) => {
            let settings = Settings::resolve(flags.into(), threads.as_deref())?;
            let sim = settings.simulator()?;
            let outcome = execute(&settings, &*sim)?;
            emit_outputs(&outcome, &settings, &*sim, &settings.out)?;
            let e = &outcome.ensemble;
            println!(
                "{} on {}: n={} accepted={} ESS/n={:.4} SS={:.2} -> {}",
                settings.alg,
                settings.sim,
                e.len(),
                e.accepted_count(),
                e.ess_over_n(),
                outcome.ss_mean(),
                settings.out.display()
            );
        }
        Command::Compare(flags) => {
            let settings = Settings::resolve(flags.into(), threads.as_deref())?;
            if settings.compare.algorithms.len() < 2 {
                return Err(CliError::Usage("compare needs at least two algorithms".into()));
            }
            let sim = settings.simulator()?;
            let (rows, _) = compare(&settings, &*sim, &settings.out)?;
            println!("algorithm,epsilon,ss_mean,ss_std,ess_over_n_mean");
            for r in rows {
                println!(
                    "{},{},{:.3},{:.3},{:.4}",
                    r.algorithm, r.epsilon, r.ss_mean, r.ss_std, r.ess_over_n_mean
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("omc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
