use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use viopt_core::problems::ProblemInstance;
use viopt_harness::records::format_f64;
use viopt_harness::{
    emit_csv, emit_plane, emit_plot, emit_trajectories, grid_search, load_results, load_trajectories, parse_config,
    run_experiment, verify, PlotOptions,
};

#[derive(Parser)]
#[command(name = "viopt", version, about = "Seeded experiments for variational-inequality game solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; writes results.csv, problem.json and, for
    /// two-dimensional games, trajectory.csv.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores). VIOPT_WORKERS takes precedence.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Plot a results.csv: one log-scale curve per method at its best step size.
    Plot {
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Draw iterate paths over the vector field instead; reads
        /// trajectory.csv and problem.json next to the results file.
        #[arg(long)]
        plane: bool,
        #[arg(long)]
        title: Option<String>,
    },
    /// Run the closed-form convergence checks.
    Verify,
}

fn workers(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var("VIOPT_WORKERS") {
        Ok(v) => {
            let n: usize = v.trim().parse().with_context(|| format!("VIOPT_WORKERS={v:?} is not a count"))?;
            if n == 0 {
                bail!("VIOPT_WORKERS must be ≥ 1");
            }
            Ok(Some(n))
        }
        Err(_) => match flag {
            Some(0) => bail!("--workers must be ≥ 1"),
            other => Ok(other),
        },
    }
}

fn run(config_path: &Path, out: Option<PathBuf>, workers_flag: Option<usize>) -> Result<()> {
    let config = parse_config(config_path)?;
    let dir = out.or_else(|| config.output_dir.clone()).unwrap_or_else(|| PathBuf::from("viopt-out"));
    let output = run_experiment(&config, workers(workers_flag)?)?;
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    emit_csv(&output.records, &dir.join("results.csv"))?;
    std::fs::write(dir.join("problem.json"), output.problem.to_json())
        .with_context(|| format!("cannot write {}", dir.join("problem.json").display()))?;
    if output.problem.dim() == 2 {
        emit_trajectories(&output.trajectories, &dir.join("trajectory.csv"))?;
    }
    for s in grid_search(&output.records)? {
        let note = if s.convergent { String::new() } else { "  (no convergent setting)".to_string() };
        println!("{:<20} step size {}  mean final {}{note}", s.method, format_f64(s.step_size), format_f64(s.mean_final));
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn plot(results: &Path, out: &Path, plane: bool, title: Option<String>) -> Result<()> {
    let records = load_results(results)?;
    let opts = PlotOptions { title, ..PlotOptions::default() };
    if plane {
        let dir = results.parent().unwrap_or(Path::new("."));
        let problem_path = dir.join("problem.json");
        let text = std::fs::read_to_string(&problem_path).with_context(|| format!("cannot read {}", problem_path.display()))?;
        let problem = ProblemInstance::from_json(&text).with_context(|| format!("invalid {}", problem_path.display()))?;
        let trajectories = load_trajectories(&dir.join("trajectory.csv"))?;
        emit_plane(&problem, &trajectories, &grid_search(&records)?, out, &opts)?;
    } else {
        emit_plot(&records, out, &opts)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, workers } => run(&config, out, workers),
        Command::Plot { results, out, plane, title } => plot(&results, &out, plane, title),
        Command::Verify => {
            let checks = verify::run_checks();
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().all(|c| c.passed) {
                return ExitCode::SUCCESS;
            }
            return ExitCode::FAILURE;
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
