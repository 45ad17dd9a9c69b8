//! Update rules and run loops.
//!
//! Single deterministic steps live in [`steps`]. The run loops thread state
//! through `T` iterations with an optional minibatch oracle, online averaging,
//! a metric series and divergence detection:
//!
//! | function                    | rule per iteration                                  | evaluations | draws |
//! |-----------------------------|-----------------------------------------------------|-------------|-------|
//! | [`run_avg_sgd`]             | projected stochastic gradient step                  | `T`         | `T`   |
//! | [`run_avg_extra_sgd`]       | extragradient, two independent minibatches          | `2T`        | `2T`  |
//! | [`run_avg_past_extra_sgd`]  | extrapolation from the past                         | `T`         | `T`   |
//! | [`run_re_extra_sgd`]        | extragradient, one minibatch used twice             | `2T`        | `T`   |
//! | [`run_extra_adam`]          | Adam with an extrapolation step                     | `2T` or `T+1` | same |
//! | [`run_baseline_adam`]       | Adam, simultaneous or alternated                    | `T` or `(k+1)T` | same |

mod adam;
mod averaging;
mod oracle;
mod run;
mod schedule;
pub mod steps;

use serde::{Deserialize, Serialize};

pub use adam::{bias_corrections, run_baseline_adam, run_extra_adam, AdamHyper, AdamMode, AdamState, ExtrapolationOption};
pub use averaging::{update_average, Averager, AveragingScheme};
pub use run::{run_rule, Rule};
pub use schedule::StepSizeSchedule;
pub use steps::{
    step_alternated, step_extragradient, step_extrapolation_from_past, step_implicit, step_nesterov, step_simultaneous,
};

use crate::error::{Error, Result};
use crate::metrics::MeritSpec;
use crate::problems::ProblemInstance;

/// Iterates whose norm exceeds this count as diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// How the stored gradient of extrapolation from the past is initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PastGradientInit {
    /// `d₋₁ = 0`: the first extrapolation is a no-op.
    #[default]
    Zero,
    /// `d₋₁ = F(ω₀)`: the first iteration is a full extragradient step. Costs
    /// one extra evaluation and draw.
    AtStart,
}

/// Settings shared by every run loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub schedule: StepSizeSchedule,
    pub averaging: AveragingScheme,
    pub iters: usize,
    pub seed: u64,
    /// Minibatch size; ignored for deterministic fields.
    pub batch: usize,
    /// Metrics and trajectory are recorded every `stride` iterations and at the end.
    pub stride: usize,
    /// Starting point; the projection of the origin when absent.
    pub start: Option<Vec<f64>>,
    /// Step-size multipliers for the two players.
    pub player_scales: [f64; 2],
    pub past_init: PastGradientInit,
    /// Tracked measure; distance to the solution (or reference point) when
    /// absent and one is known.
    pub metric: Option<MeritSpec>,
    pub record_trajectory: bool,
}

impl RunOptions {
    pub fn new(schedule: StepSizeSchedule, iters: usize) -> Self {
        RunOptions {
            schedule,
            averaging: AveragingScheme::StepWeighted,
            iters,
            seed: 0,
            batch: 1,
            stride: 10,
            start: None,
            player_scales: [1.0, 1.0],
            past_init: PastGradientInit::Zero,
            metric: None,
            record_trajectory: true,
        }
    }

    pub fn constant(eta: f64, iters: usize) -> Self {
        Self::new(StepSizeSchedule::constant(eta), iters)
    }

    pub fn with_start(mut self, start: Vec<f64>) -> Self {
        self.start = Some(start);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_averaging(mut self, averaging: AveragingScheme) -> Self {
        self.averaging = averaging;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch;
        self
    }

    pub fn with_metric(mut self, metric: MeritSpec) -> Self {
        self.metric = Some(metric);
        self
    }

    pub fn with_past_init(mut self, init: PastGradientInit) -> Self {
        self.past_init = init;
        self
    }

    pub(crate) fn validate(&self, problem: &ProblemInstance) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::ZeroIterations);
        }
        self.schedule.validate()?;
        self.averaging.validate()?;
        if self.batch == 0 {
            return Err(Error::InvalidParameter("minibatch size must be at least 1".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter("stride must be at least 1".into()));
        }
        if self.player_scales.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("player scales must be positive, got {:?}", self.player_scales)));
        }
        if self.player_scales != [1.0, 1.0] && problem.field().block_split().is_none() {
            return Err(Error::MissingBlockSplit);
        }
        if let Some(start) = &self.start {
            if start.len() != problem.dim() {
                return Err(Error::DimensionMismatch { expected: problem.dim(), found: start.len() });
            }
            if start.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinitePoint(start.clone()));
            }
        }
        if let Some(m) = &self.metric {
            m.check(problem)?;
        }
        Ok(())
    }

    /// The tracked measure: the explicit one, else a distance when a target is known.
    pub(crate) fn resolved_metric(&self, problem: &ProblemInstance) -> Option<MeritSpec> {
        if let Some(m) = &self.metric {
            return Some(m.clone());
        }
        if problem.equilibrium().is_some() {
            Some(MeritSpec::DistanceToSolution)
        } else if problem.reference_point().is_some() {
            Some(MeritSpec::DistanceToReferencePoint)
        } else {
            None
        }
    }

    pub(crate) fn start_point(&self, problem: &ProblemInstance) -> Vec<f64> {
        let mut x = self.start.clone().unwrap_or_else(|| vec![0.0; problem.dim()]);
        problem.constraints().project_in_place(&mut x);
        x
    }
}

/// One sample of the tracked measure, on the last and on the averaged iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPoint {
    pub iter: usize,
    /// Operator evaluations spent up to `iter`.
    pub evals: u64,
    pub last: f64,
    /// Equal to `last` when the run does not average.
    pub average: f64,
}

/// Which iterate a run reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Report {
    Last,
    Average,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverRun {
    pub method: String,
    pub options: RunOptions,
    pub metric_name: Option<&'static str>,
    /// Increasing in `iter`.
    pub metrics: Vec<MetricPoint>,
    /// Sampled iterates `(t, ω_t)`.
    pub trajectory: Vec<(usize, Vec<f64>)>,
    pub last: Vec<f64>,
    pub average: Option<Vec<f64>>,
    pub half: Option<Vec<f64>>,
    pub eval_count: u64,
    pub draw_count: u64,
    pub diverged: bool,
    pub iters_completed: usize,
}

impl SolverRun {
    /// The returned point: the average when the run averages, else the last iterate.
    pub fn output(&self) -> &[f64] {
        self.average.as_deref().unwrap_or(&self.last)
    }

    pub fn series(&self, report: Report) -> Vec<(usize, f64)> {
        self.metrics
            .iter()
            .map(|m| (m.iter, if report == Report::Last { m.last } else { m.average }))
            .collect()
    }

    pub fn final_value(&self, report: Report) -> Option<f64> {
        self.series(report).last().map(|p| p.1)
    }
}

/// A complete method description for dispatch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Rule(Rule),
    ExtraAdam { hyper: AdamHyper, option: ExtrapolationOption },
    Adam { hyper: AdamHyper, mode: AdamMode },
}

pub fn run_method(problem: &ProblemInstance, method: &Method, opts: &RunOptions) -> Result<SolverRun> {
    match *method {
        Method::Rule(rule) => run_rule(problem, rule, opts),
        Method::ExtraAdam { hyper, option } => run_extra_adam(problem, hyper, option, opts),
        Method::Adam { hyper, mode } => run_baseline_adam(problem, hyper, mode, opts),
    }
}

/// Averaged SGD: `ω_{t+1} = P_Ω[ω_t − η_t F(ω_t, ξ_t)]`, returning the
/// step-weighted average of `ω_0, …, ω_{T−1}` (with the default averaging).
pub fn run_avg_sgd(problem: &ProblemInstance, opts: &RunOptions) -> Result<SolverRun> {
    run_rule(problem, Rule::Simultaneous, opts)
}

/// Stochastic extragradient with averaging of the extrapolated points; the
/// extrapolation and the update use independent minibatches.
pub fn run_avg_extra_sgd(problem: &ProblemInstance, opts: &RunOptions) -> Result<SolverRun> {
    run_rule(problem, Rule::Extragradient { reuse_sample: false }, opts)
}

/// Stochastic extrapolation from the past with averaging of the extrapolated
/// points: one minibatch and one evaluation per iteration.
pub fn run_avg_past_extra_sgd(problem: &ProblemInstance, opts: &RunOptions) -> Result<SolverRun> {
    run_rule(problem, Rule::PastExtragradient, opts)
}

/// Stochastic extragradient where the update reuses the extrapolation's minibatch.
pub fn run_re_extra_sgd(problem: &ProblemInstance, opts: &RunOptions) -> Result<SolverRun> {
    run_rule(problem, Rule::Extragradient { reuse_sample: true }, opts)
}
