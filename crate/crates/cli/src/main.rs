use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use covham_cli::commands;
use covham_cli::output::Format;
use covham_cli::verify::{self, VerifyOptions};
use covham_cli::{load_scenario, CliError};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "covham", version, about = "Structural Poisson brackets and covariant Hamiltonian flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the bracket invariant suite at seeded sample points.
    Verify {
        file: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
        /// Replaces every check tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Integrate the TGHS flow and export the trajectory.
    Simulate {
        file: PathBuf,
        /// Defaults to the scenario's horizon.
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        /// Defaults to the scenario's step.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        observables: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Print the structural bracket of two expressions and its parts.
    Bracket {
        file: PathBuf,
        #[arg(long = "f", allow_hyphen_values = true)]
        f: String,
        #[arg(long = "g", allow_hyphen_values = true)]
        g: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        at: Vec<f64>,
    },
    /// Solve DH = 0 by damped Newton.
    Equilibrium {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        guess: Vec<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 50)]
        max_iter: usize,
    },
    /// Print the characteristic data of the acceleration flow at a point.
    Roots {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        at: Vec<f64>,
    },
}

fn print<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::numerical(e.to_string()))?;
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Verify { file, samples, tol, seed } => {
            let model = load_scenario(&file)?;
            let mut opts = VerifyOptions::for_model(&model);
            if let Some(n) = samples {
                opts.samples = n;
            }
            if let Some(s) = seed {
                opts.seed = s;
            }
            if let Some(t) = tol {
                if !(t.is_finite() && t >= 0.0) {
                    return Err(CliError::input("--tol must be a finite value >= 0"));
                }
                let tl = &mut opts.tolerances;
                (tl.bracket, tl.gji, tl.jacobiator, tl.christoffel, tl.riemann) = (t, t, t, t, t);
            }
            let report = verify::run(&model, opts)?;
            print(&report)?;
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Simulate {
            file,
            t_end,
            dt,
            observables,
            out,
            format,
        } => {
            let model = load_scenario(&file)?;
            let summary = commands::simulate(&model, t_end, dt, &observables, &out, format)?;
            eprintln!("wrote {} rows to {}", summary.rows, out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Bracket { file, f, g, at } => {
            let model = load_scenario(&file)?;
            print(&commands::bracket(&model, &f, &g, &at)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Equilibrium {
            file,
            guess,
            tol,
            max_iter,
        } => {
            let model = load_scenario(&file)?;
            let report = commands::equilibrium(&model, &guess, tol, max_iter)?;
            print(&report)?;
            Ok(if report.converged { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Roots { file, at } => {
            let model = load_scenario(&file)?;
            print(&commands::roots(&model, &at)?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
