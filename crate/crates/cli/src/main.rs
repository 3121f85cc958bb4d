use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use potkit_cli::scene::load_scene;
use potkit_cli::tasks::{self, ConesVerb, Overrides, Task};
use potkit_cli::verify;

#[derive(Parser, Debug)]
#[command(name = "potkit", version, about = "Batch runs of potkit scenes with CSV and JSON output")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scene file (JSON).
    #[arg(long, global = true, env = "POTKIT_SCENE")]
    scene: Option<PathBuf>,
    /// Output directory; created if missing.
    #[arg(long, global = true, env = "POTKIT_OUT", default_value = "out")]
    out: PathBuf,
    /// Seed for randomized steps; overrides the scene seed.
    #[arg(long, global = true, env = "POTKIT_SEED")]
    seed: Option<u64>,
    /// Relative tolerance for expect checks; overrides the scene tolerance.
    #[arg(long, global = true, env = "POTKIT_TOL")]
    tol: Option<f64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, env = "POTKIT_JOBS")]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Riesz potential ratios along an approach path.
    Riesz,
    /// Riesz or variational capacity, optionally under dilation.
    Capacity,
    /// Wiener-type series and thinness verdict.
    Thin,
    /// Wolff potential asymptotics or the thin-set witness.
    Wolff,
    /// Grid solution of the p-Laplace Dirichlet problem.
    Plaplace,
    /// Cone membership, inclusion search and critical exponents.
    Cones {
        #[command(subcommand)]
        verb: ConesCmd,
    },
    /// Upper densities and box-counting dimensions.
    Density,
    /// Runs the built-in acceptance suite.
    VerifyAll {
        /// Restrict to these criterion numbers.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
    },
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum ConesCmd {
    Member,
    Include,
    Pgamma,
}

fn task_of(c: &Command) -> Option<Task> {
    Some(match c {
        Command::Riesz => Task::Riesz,
        Command::Capacity => Task::Capacity,
        Command::Thin => Task::Thin,
        Command::Wolff => Task::Wolff,
        Command::Plaplace => Task::Plaplace,
        Command::Cones { verb: ConesCmd::Member } => Task::Cones(ConesVerb::Member),
        Command::Cones { verb: ConesCmd::Include } => Task::Cones(ConesVerb::Include),
        Command::Cones { verb: ConesCmd::Pgamma } => Task::Cones(ConesVerb::Pgamma),
        Command::Density => Task::Density,
        Command::VerifyAll { .. } => return None,
    })
}

/// Exit status 1 is reserved for usage, schema and input errors; 2 for failed checks.
fn run(cli: Cli) -> Result<u8> {
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global().context("configuring worker threads")?;
    }
    if let Command::VerifyAll { criteria } = &cli.command {
        let known = verify::criterion_ids();
        if let Some(bad) = criteria.iter().find(|c| !known.contains(c)) {
            anyhow::bail!("no acceptance criterion numbered {bad}");
        }
        let (artifacts, results) = verify::run_all(cli.seed.unwrap_or(0), criteria)?;
        artifacts.commit(&cli.out)?;
        for line in verify::summary_lines(&results) {
            println!("{line}");
        }
        return Ok(if results.iter().all(|r| r.passed) { 0 } else { 2 });
    }
    let task = task_of(&cli.command).expect("verify-all handled above");
    let path = cli.scene.as_ref().context("--scene is required for this subcommand")?;
    let scene = load_scene(path)?;
    let outcome = tasks::run(task, &scene, &Overrides { seed: cli.seed, tolerance: cli.tol })?;
    outcome.artifacts.commit(&cli.out)?;
    for f in &outcome.failures {
        eprintln!("check failed: {f}");
    }
    Ok(outcome.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
