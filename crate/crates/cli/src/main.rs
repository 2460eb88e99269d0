//! `lie-ensemble`: runs TOML scenarios and writes a JSON report plus CSV
//! artifacts.
//!
//! Exit codes: 0 when every verdict passes, 1 when a verdict fails, 2 for an
//! unreadable or invalid scenario (nothing is written), 3 for internal and
//! I/O errors.

mod commands;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Outcome;
use crate::scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("scenario error: {0}")]
    Parse(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

#[derive(Parser)]
#[command(name = "lie-ensemble", version, about = "Scenario runner for ensemble control on matrix Lie groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a generator set is distinguished and its matrix coefficients codistinguished.
    Verify(RunArgs),
    /// Compute the projective Lie closure and indicator sequences.
    Closure(RunArgs),
    /// Integrate a broadcast-controlled ensemble.
    Simulate(RunArgs),
    /// Fit polynomial controls to a target and run the convergence study.
    Synthesize(RunArgs),
    /// Moment tables, separation tests and reconstruction.
    Observe(RunArgs),
    /// Sphere relations and sphere ensembles.
    Sphere(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, env = "LIE_ENSEMBLE_OUT", default_value = "out")]
    out: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Verify(a) => ("verify", a),
            Command::Closure(a) => ("closure", a),
            Command::Simulate(a) => ("simulate", a),
            Command::Synthesize(a) => ("synthesize", a),
            Command::Observe(a) => ("observe", a),
            Command::Sphere(a) => ("sphere", a),
        }
    }
}

fn load(name: &str, args: &RunArgs) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(&args.scenario)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", args.scenario.display())))?;
    let mut sc = Scenario::parse(&text)?;
    if let Some(cmd) = &sc.command {
        if cmd != name {
            return Err(CliError::Parse(format!("scenario is for '{cmd}', not '{name}'")));
        }
    }
    if let Some(seed) = args.seed {
        sc.seed = seed;
    }
    Ok(sc)
}

/// Writes every file to a temporary name first, then renames, so a failed
/// run leaves no half-written artifact behind.
fn write_all(dir: &Path, outcome: &Outcome) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Internal(format!("cannot create {}: {e}", dir.display())))?;
    let mut files = vec![("report.json".to_string(), outcome.report.to_json().map_err(commands::internal)?)];
    files.extend(outcome.files.iter().cloned());
    let mut staged = Vec::new();
    for (name, body) in &files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, body) {
            for t in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(CliError::Internal(format!("cannot write {}: {e}", tmp.display())));
        }
        staged.push(tmp);
    }
    for ((name, _), tmp) in files.iter().zip(&staged) {
        fs::rename(tmp, dir.join(name)).map_err(commands::internal)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let (name, args) = cli.command.parts();
    let sc = load(name, args)?;
    if let Some(k) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(commands::internal)?;
    }
    let outcome = match &cli.command {
        Command::Verify(_) => commands::verify(&sc),
        Command::Closure(_) => commands::closure(&sc),
        Command::Simulate(_) => commands::simulate(&sc),
        Command::Synthesize(_) => commands::synthesize(&sc),
        Command::Observe(_) => commands::observe(&sc),
        Command::Sphere(_) => commands::sphere(&sc),
    }?;
    write_all(&args.out, &outcome)?;
    for v in &outcome.report.verdicts {
        println!("{} {}", if v.pass { "PASS" } else { "FAIL" }, v.name);
    }
    Ok(outcome.report.pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("lie-ensemble: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
