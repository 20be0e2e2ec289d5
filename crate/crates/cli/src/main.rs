use std::path::PathBuf;
use std::process::ExitCode;

use bilayer::plot;
use bilayer::run::{run, RunOptions};
use bilayer::verify::{verify, VerifyOptions};
use bilayer_core::Scheme;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bilayer", version, about = "Double-layered distributed solvers for Ax = b")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Row,
    Column,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory.csv and summary.json.
    Run {
        scenario: PathBuf,
        /// Output directory (default ./out/<scenario stem>/).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's scheme.
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
    },
    /// Randomized spectrum and convergence checks for both schemes.
    Verify {
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
        max_dim: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write plot.csv (t, ln V and the fitted line) into a run directory.
    Plot { run_dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out, scheme } => {
            let scheme = scheme.map(|s| match s {
                SchemeArg::Row => Scheme::Row,
                SchemeArg::Column => Scheme::Column,
            });
            match run(&RunOptions { scenario, out, scheme }) {
                Ok((dir, summary)) => {
                    println!(
                        "converged at t={} (max residual {:e}); artifacts in {}",
                        summary.final_time,
                        summary.final_residuals.max,
                        dir.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
        Command::Verify { trials, max_dim, seed } => {
            let report = verify(VerifyOptions { trials: trials as usize, max_dim: max_dim as usize, seed });
            print!("{}", report.text);
            if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Plot { run_dir } => match plot::emit(&run_dir) {
            Ok((path, data)) => {
                match data.fit {
                    Some(f) => println!("slope {:e}, R^2 {:.6}; wrote {}", f.slope, f.r_squared, path.display()),
                    None => println!("too few samples above the fit floor for a rate fit; wrote {}", path.display()),
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}

fn fail(e: &bilayer::CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
