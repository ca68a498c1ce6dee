//! `teamvote`: run a configured experiment or a built-in preset and write
//! its result tables.
//!
//! Every flag can also be set through an environment variable with the
//! `TEAMVOTE_` prefix (`TEAMVOTE_CONFIG`, `TEAMVOTE_PRESET`, `TEAMVOTE_OUT`,
//! `TEAMVOTE_SEED`, `TEAMVOTE_FORMAT`, `TEAMVOTE_JOBS`); flags win.
//!
//! Exit status: 0 success, 1 output could not be written, 2 configuration
//! or usage error, 3 solver failure, 4 a preset self-check failed.

mod config;
mod error;
mod output;
mod presets;
mod run;

use clap::{ArgGroup, Parser};
use std::path::PathBuf;
use std::process::ExitCode;

use config::RawConfig;
use error::CliError;
use output::{write_tables, Format};
use teamvote::SolverOptions;

#[derive(Debug, Parser)]
#[command(name = "teamvote", version, about = "Optimal voting thresholds for teams of Bayesian agents")]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
struct Args {
    /// Experiment configuration (TOML).
    #[arg(long, env = "TEAMVOTE_CONFIG")]
    config: Option<PathBuf>,

    /// Built-in experiment: fig4, fig6, fig7, thm1, thm3 or cor2.
    #[arg(long, env = "TEAMVOTE_PRESET")]
    preset: Option<String>,

    /// Output directory (overrides the config's output.directory).
    #[arg(long, env = "TEAMVOTE_OUT")]
    out: Option<PathBuf>,

    /// Seed for Monte Carlo runs and for presets that draw random scenarios.
    #[arg(long, env = "TEAMVOTE_SEED")]
    seed: Option<u64>,

    /// Output format.
    #[arg(long, env = "TEAMVOTE_FORMAT", value_enum)]
    format: Option<Format>,

    /// Worker threads; 1 runs everything on the calling thread.
    #[arg(long, env = "TEAMVOTE_JOBS", value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
}

const DEFAULT_OUT: &str = "teamvote-output";

fn run(args: Args) -> Result<(), CliError> {
    let jobs = args.jobs.map(usize::from);
    if let Some(k) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let opts = SolverOptions::default().with_execution(run::execution_for(jobs));

    let (tables, failures, out, format) = if let Some(path) = &args.config {
        let exp = RawConfig::load(path)?.validate()?;
        let tables = run::run_experiment(&exp, &opts, args.seed)?;
        (tables, Vec::new(), args.out.or(exp.out_dir), args.format.or(exp.format))
    } else {
        let name = args.preset.as_deref().expect("clap requires a source");
        let p = presets::run_preset(name, &opts, args.seed)?;
        (p.tables, p.failures, args.out, args.format)
    };

    let dir = out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    for path in write_tables(&dir, format.unwrap_or(Format::Csv), &tables)? {
        println!("wrote {}", path.display());
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failures))
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
