//! Running a (method × step size × seed) grid.

use rayon::prelude::*;
use viopt_core::problems::ProblemInstance;
use viopt_core::rng::mix64;
use viopt_core::solvers::{run_method, AveragingScheme, Report, RunOptions, StepSizeSchedule};

use crate::config::{ExperimentConfig, MethodConfig, ScheduleKind};
use crate::error::{HarnessError, Result};
use crate::records::{ResultRecord, TrajectoryRecord};

/// Everything one experiment produces, in canonical order: methods in config
/// order, then increasing step size, then seeds in config order, then `iter`.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub problem: ProblemInstance,
    pub records: Vec<ResultRecord>,
    /// Sampled iterates; only filled for two-dimensional games.
    pub trajectories: Vec<TrajectoryRecord>,
}

/// FNV-1a, so that cell seeds do not depend on the standard library's hasher.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Seed of one grid cell:
/// `mix64(mix64(mix64(mix64(base) ^ fnv1a(method)) ^ η index) ^ seed index)`.
///
/// Depends only on the cell's coordinates, never on scheduling.
pub fn cell_seed(base: u64, method: &str, eta_index: usize, seed_index: usize) -> u64 {
    let h = mix64(mix64(base) ^ fnv1a(method));
    mix64(mix64(h ^ eta_index as u64) ^ seed_index as u64)
}

struct Cell<'c> {
    method: &'c MethodConfig,
    eta_index: usize,
    step_size: f64,
    seed_index: usize,
    seed: u64,
}

struct CellOutput {
    records: Vec<ResultRecord>,
    trajectory: Vec<TrajectoryRecord>,
}

fn cells(config: &ExperimentConfig) -> Vec<Cell<'_>> {
    let mut out = Vec::new();
    for method in &config.methods {
        let mut order: Vec<(usize, f64)> = method.grid().iter().copied().enumerate().collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1));
        for (eta_index, step_size) in order {
            for (seed_index, &seed) in config.seeds.iter().enumerate() {
                out.push(Cell { method, eta_index, step_size, seed_index, seed });
            }
        }
    }
    out
}

fn run_cell(config: &ExperimentConfig, problem: &ProblemInstance, cell: &Cell) -> Result<CellOutput> {
    let id = cell.method.id;
    let name = id.as_str();
    let schedule = match cell.method.schedule {
        ScheduleKind::Constant => StepSizeSchedule::Constant { eta: cell.step_size },
        ScheduleKind::InverseSqrt => StepSizeSchedule::InverseSqrt { eta0: cell.step_size },
    };
    let report = id.report();
    let averaging = match report {
        Report::Average => cell.method.averaging.unwrap_or(AveragingScheme::StepWeighted),
        Report::Last => AveragingScheme::None,
    };
    let mut opts = RunOptions::new(schedule, config.iters)
        .with_seed(cell_seed(cell.seed, name, cell.eta_index, cell.seed_index))
        .with_averaging(averaging)
        .with_stride(config.eval_stride)
        .with_batch(config.batch);
    if let Some(start) = &config.start {
        opts = opts.with_start(start.clone());
    }
    if let Some(init) = cell.method.hyper.past_init {
        opts = opts.with_past_init(init);
    }
    if let Some(m) = config.merit_spec() {
        opts = opts.with_metric(m);
    }
    opts.record_trajectory = problem.dim() == 2;

    let fail = |source| HarnessError::Cell { method: name.to_string(), step_size: cell.step_size, seed: cell.seed, source };
    let run = run_method(problem, &id.method(&cell.method.hyper), &opts).map_err(fail)?;
    let metric = run.metric_name.ok_or_else(|| {
        HarnessError::config("metric", format!("{} has no solution or reference point to measure against", problem.label()))
    })?;
    let n = run.metrics.len();
    let records = run
        .metrics
        .iter()
        .enumerate()
        .map(|(i, m)| ResultRecord {
            method: name.to_string(),
            step_size: cell.step_size,
            seed: cell.seed,
            iter: m.iter,
            metric: metric.to_string(),
            value: if report == Report::Last { m.last } else { m.average },
            diverged: run.diverged && i + 1 == n,
            eval_count: m.evals,
        })
        .collect();
    let trajectory = run
        .trajectory
        .iter()
        .map(|(iter, w)| TrajectoryRecord {
            method: name.to_string(),
            step_size: cell.step_size,
            seed: cell.seed,
            iter: *iter,
            theta: w[0],
            phi: w[1],
        })
        .collect();
    Ok(CellOutput { records, trajectory })
}

/// Runs every cell of the grid on `workers` threads (all available cores when
/// `None`). The output does not depend on `workers`.
pub fn run_experiment(config: &ExperimentConfig, workers: Option<usize>) -> Result<ExperimentOutput> {
    config.validate()?;
    let problem = config.build_problem()?;
    let cells = cells(config);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder.build().map_err(|e| HarnessError::config("workers", e.to_string()))?;
    let outputs: Vec<Result<CellOutput>> =
        pool.install(|| cells.par_iter().map(|c| run_cell(config, &problem, c)).collect());

    let mut records = Vec::new();
    let mut trajectories = Vec::new();
    for out in outputs {
        let out = out?;
        records.extend(out.records);
        trajectories.extend(out.trajectory);
    }
    Ok(ExperimentOutput { problem, records, trajectories })
}
