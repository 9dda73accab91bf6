use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use spectral_count::cli::{self, Mode, Overrides};

/// Count and locate eigenvalues of self-adjoint operator-functions.
#[derive(Debug, Parser)]
#[command(name = "spectral-count", version)]
struct Args {
    /// One of nu-scan, branches, count, verify.
    mode: Mode,
    /// JSON problem definition.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Finite elements (overrides mesh).
    #[arg(long)]
    mesh: Option<usize>,
    /// Points of the lambda grid (overrides lambda_grid.steps).
    #[arg(long)]
    grid_steps: Option<usize>,
}

#[cfg(feature = "parallel")]
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("SPECTRAL_COUNT_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("SPECTRAL_COUNT_THREADS must be a positive integer, found {raw:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().map_err(|e| e.to_string())
}

#[cfg(not(feature = "parallel"))]
fn configure_threads() -> Result<(), String> {
    Ok(())
}

fn main() -> ExitCode {
    // usage errors exit 1: status 2 is reserved for verdict failures
    let args = match Args::try_parse() {
        Ok(args) => args,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(cli::EXIT_ERROR as u8) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(cli::EXIT_ERROR as u8);
    }
    let overrides = Overrides { mode: Some(args.mode), out: args.out, mesh: args.mesh, grid_steps: args.grid_steps };
    let result = cli::load_config(&args.config)
        .and_then(|c| c.apply(&overrides))
        .map_err(cli::CliError::from)
        .and_then(|c| cli::run(&c));
    match result {
        Ok(outcome) => {
            // a closed pipe on stdout is not an error of the run
            let mut stdout = std::io::stdout().lock();
            let _ = write!(stdout, "{}", outcome.summary);
            for a in &outcome.artifacts {
                let _ = writeln!(stdout, "wrote {}", a.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::EXIT_ERROR as u8)
        }
    }
}
