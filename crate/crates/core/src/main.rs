use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use shieldsim::error::{Error, Result};
use shieldsim::experiments::{self, write_report, Experiment, ExperimentConfig, RunManifest, RunOptions};
use shieldsim::propagation::PropagatorChoice;

/// Exact dynamics of long-range spin chains.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: Experiment,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, env = "SHIELDSIM_THREADS")]
    threads: Option<usize>,
    /// Override the propagator: auto, dense or cheby.
    #[arg(long)]
    propagator: Option<PropagatorChoice>,
}

fn run(args: &Args) -> Result<()> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    }
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let config = ExperimentConfig::from_toml(&text)?;
    let start = Instant::now();
    let report = experiments::run(
        args.experiment,
        &config,
        &RunOptions {
            propagator: args.propagator,
        },
    )?;
    let wall = start.elapsed().as_secs_f64();
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if args.experiment == Experiment::Estimate {
        if let Some(summary) = &report.summary {
            // a closed pipe is not an error for scripting use
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(summary)?);
        }
    }
    let name = config.output.clone().unwrap_or_else(|| args.experiment.name().to_string());
    let manifest = RunManifest::new(&report, &config, &text, wall);
    for path in write_report(&report, &args.out, &name, manifest)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
