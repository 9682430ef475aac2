use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prsgd::cli::{self, Axis, CliError, Outcome, PlanInputs};

#[derive(Parser)]
#[command(
    name = "prsgd",
    version,
    about = "Local SGD with periodic averaging: runs, plans and checks"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every sweep point and seed in a TOML config.
    Run { config: PathBuf },
    /// Print step size, averaging interval, bound and round counts for a budget.
    Plan {
        #[arg(short = 'T', long)]
        iterations: u64,
        #[arg(short = 'N', long)]
        workers: usize,
        #[arg(short = 'L', long, default_value_t = 1.0)]
        smoothness: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(short = 'G', long, default_value_t = 1.0)]
        grad_bound: f64,
        /// f(x0) - f*.
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
    },
    /// Run the oracle suite.
    Verify {
        /// Where to write verdicts.csv. Defaults to $PRSGD_OUT_DIR when set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit log-log slopes from a summary.csv.
    Slope {
        summary: PathBuf,
        #[arg(long, value_parser = parse_axis)]
        axis: Axis,
    },
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    s.parse()
}

fn dispatch(command: Command) -> Result<Outcome, CliError> {
    match command {
        Command::Run { config } => cli::run_experiment(&config),
        Command::Plan {
            iterations,
            workers,
            smoothness,
            sigma,
            grad_bound,
            gap,
        } => cli::plan_report(&PlanInputs {
            iterations,
            workers,
            smoothness,
            sigma,
            grad_bound,
            f0_minus_fstar: gap,
        })
        .map(|report| Outcome {
            report,
            exit_code: cli::EXIT_OK,
            out_dir: None,
        }),
        Command::Verify { out } => {
            let out = out.or_else(|| {
                std::env::var_os(cli::OUT_DIR_ENV)
                    .filter(|v| !v.is_empty())
                    .map(PathBuf::from)
            });
            cli::verify(out.as_deref())
        }
        Command::Slope { summary, axis } => cli::slope_report(&summary, axis),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                cli::EXIT_CONFIG as u8
            } else {
                0
            });
        }
    };
    match dispatch(args.command) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
