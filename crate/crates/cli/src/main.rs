use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use hdsteer::qcore::Tolerances;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod commands;
mod error;
mod scenario;

use error::CliError;
use scenario::{Builder, Scenario};

/// Steering, simulability and channel certificates from scenario files.
#[derive(Debug, Parser)]
#[command(name = "hdsteer", version)]
struct Args {
    /// Scenario file (JSON).
    #[arg(long)]
    scenario: PathBuf,
    /// Output path; defaults to the scenario's "output" or stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random payloads; overrides the scenario's "seed".
    #[arg(long)]
    seed: Option<u64>,
    /// Validation tolerance for payload objects; overrides the scenario's "tol".
    #[arg(long)]
    tol: Option<f64>,
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("HDSTEER_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Parse(format!("HDSTEER_THREADS must be a positive integer, got {v:?}"))),
        },
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.scenario.display())))?;
    let mut scenario = Scenario::parse(&text)?;
    if args.seed.is_some() {
        scenario.seed = args.seed;
    }
    if args.tol.is_some() {
        scenario.tol = args.tol;
    }
    let seed = *scenario.seed.get_or_insert(0);
    let tol = match scenario.tol {
        Some(t) if !(t > 0.0 && t.is_finite()) => {
            return Err(CliError::Parse(format!("tolerance must be positive, got {t}")))
        }
        Some(t) => Tolerances::loosened(t),
        None => Tolerances::default(),
    };
    let mut builder = Builder {
        tol,
        rng: ChaCha8Rng::seed_from_u64(seed),
        used_randomness: false,
    };
    let text = commands::run(&scenario, &mut builder, thread_cap()?)?.render();
    let out = args
        .out
        .clone()
        .or_else(|| scenario.output.as_ref().map(PathBuf::from));
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hdsteer: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
