use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stocfl::harness::{cluster_only, gradcheck_suite, parse_config, run_experiment, HarnessError, DEFAULT_STEP};

#[derive(Parser)]
#[command(name = "stocfl", version, about = "Stochastic clustered federated learning simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write metrics.csv, clusters.csv and friends.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides experiment.seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check analytic gradients against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Deliberately corrupt the analytic gradient (negative control).
        #[arg(long, hide = true)]
        break_gradient: bool,
    },
    /// Client clustering only, no training.
    ClusterOnly {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(e: HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = match parse_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e.into()),
            };
            if let Some(s) = seed {
                cfg = cfg.with_seed(s);
            }
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            match run_experiment(&cfg) {
                Ok(outcome) => {
                    println!("{}", outcome.summary);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::ClusterOnly { config, out } => {
            let mut cfg = match parse_config(&config) {
                Ok(c) => c,
                Err(e) => return fail(e.into()),
            };
            if let Some(dir) = out {
                cfg.output.dir = dir;
            }
            match cluster_only(&cfg) {
                Ok(outcome) => {
                    println!("{}", outcome.summary);
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Gradcheck { step, break_gradient } => {
            if !(step > 0.0 && step.is_finite()) {
                eprintln!("error: --step must be positive");
                return ExitCode::from(2);
            }
            let report = match gradcheck_suite(step, break_gradient) {
                Ok(r) => r,
                Err(e) => return fail(e.into()),
            };
            println!(
                "gradcheck cases={} coordinates={} step={:e} max_rel_err={:e} bound={:e} worst_case={}",
                report.cases, report.coordinates, report.step, report.max_rel_err, report.bound, report.worst_case
            );
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("gradcheck failed: max relative error exceeds {:e}", report.bound);
                ExitCode::from(4)
            }
        }
    }
}
