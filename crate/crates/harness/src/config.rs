//! Experiment configuration: strict JSON, validated on load.
//!
//! ```json
//! {
//!   "problem": { "kind": "stochastic_bilinear", "parameters": { "n": 100, "d": 20 }, "seed": 7 },
//!   "methods": [
//!     { "id": "sim_sgd" },
//!     { "id": "avg_past_extra_sgd", "step_sizes": [0.01, 0.03] }
//!   ],
//!   "iters": 20000,
//!   "eval_stride": 100,
//!   "metric": "distance",
//!   "seeds": [1, 2, 3, 4, 5],
//!   "output_dir": "out/fig4"
//! }
//! ```
//!
//! Unknown keys anywhere are errors; so are hyperparameters a method does not
//! use. Every error names the offending key.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use viopt_core::metrics::MeritSpec;
use viopt_core::problems::{
    make_bilinear_1d, make_linear_wgan, make_stochastic_bilinear, make_strongly_monotone, make_strongly_monotone_boxed,
    make_toy_gan, ProblemInstance,
};
use viopt_core::solvers::AveragingScheme;
use viopt_core::Point;

use crate::error::{HarnessError, Result};
use crate::methods::{HyperConfig, MethodId};

/// Step sizes tried when a method lists none.
pub const DEFAULT_STEP_GRID: [f64; 6] = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub methods: Vec<MethodConfig>,
    pub iters: usize,
    #[serde(default = "default_stride")]
    pub eval_stride: usize,
    #[serde(default)]
    pub metric: MetricChoice,
    /// Radius of the restricted merit around the start; the whole box when absent.
    #[serde(default)]
    pub merit_radius: Option<f64>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_batch")]
    pub batch: usize,
    /// Starting point; the projection of the origin when absent.
    #[serde(default)]
    pub start: Option<Vec<f64>>,
}

fn default_stride() -> usize {
    10
}

fn default_batch() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    /// Seed of the problem generator, separate from the run seeds.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    #[serde(rename = "bilinear_1d")]
    Bilinear1d,
    StochasticBilinear,
    StronglyMonotone,
    ToyGan,
    LinearWgan,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricChoice {
    /// Distance to the solution, or to the reference point of games without one.
    #[default]
    Distance,
    /// Restricted saddle merit; bilinear games only.
    Merit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    /// `η_t = η/√(t+1)`, with `η` taken from the grid.
    InverseSqrt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub id: MethodId,
    #[serde(default)]
    pub step_sizes: Option<Vec<f64>>,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleKind,
    /// Averaging of the reported iterate; only for averaging methods.
    #[serde(default)]
    pub averaging: Option<AveragingScheme>,
    #[serde(default)]
    pub hyper: HyperConfig,
}

fn default_schedule() -> ScheduleKind {
    ScheduleKind::Constant
}

impl MethodConfig {
    pub fn grid(&self) -> &[f64] {
        self.step_sizes.as_deref().unwrap_or(&DEFAULT_STEP_GRID)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParameters {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StochasticBilinearParameters {
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_d")]
    d: usize,
    #[serde(default = "default_noise")]
    noise_scale: f64,
}

fn default_n() -> usize {
    100
}

fn default_d() -> usize {
    20
}

fn default_noise() -> f64 {
    0.5
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StronglyMonotoneParameters {
    mu: f64,
    gamma: f64,
    #[serde(default)]
    equilibrium: [f64; 2],
    /// Box `[lower, upper]²`.
    #[serde(default)]
    bounds: Option<[f64; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToyGanParameters {
    #[serde(default = "default_omega_star")]
    omega_star: f64,
}

fn default_omega_star() -> f64 {
    -2.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearWganParameters {
    mean_x: f64,
    mean_z: f64,
    #[serde(default)]
    critic_ball: bool,
}

fn typed<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { prefix.to_string() } else { format!("{prefix}.{path}") };
        HarnessError::config(key, e.into_inner().to_string())
    })
}

/// Parses and validates a config document.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let key = if path == "." { "config".to_string() } else { path };
        HarnessError::config(key, e.into_inner().to_string())
    })?;
    de.end().map_err(|e| HarnessError::config("config", e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read { path: path.to_path_buf(), source })?;
    parse_config_str(&text)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iters < 1 {
            return Err(HarnessError::config("iters", "iters must be ≥ 1"));
        }
        if self.eval_stride < 1 {
            return Err(HarnessError::config("eval_stride", "eval_stride must be ≥ 1"));
        }
        if self.batch < 1 {
            return Err(HarnessError::config("batch", "batch must be ≥ 1"));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::config("methods", "at least one method is required"));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::config("seeds", "at least one seed is required"));
        }
        let mut seen = HashSet::new();
        for (i, s) in self.seeds.iter().enumerate() {
            if !seen.insert(s) {
                return Err(HarnessError::config(format!("seeds[{i}]"), format!("seed {s} appears more than once")));
            }
        }
        let mut ids = HashSet::new();
        for (i, m) in self.methods.iter().enumerate() {
            let key = format!("methods[{i}]");
            if !ids.insert(m.id) {
                return Err(HarnessError::config(format!("{key}.id"), format!("{} is listed twice", m.id.as_str())));
            }
            let grid = m.grid();
            if grid.is_empty() {
                return Err(HarnessError::config(format!("{key}.step_sizes"), "step-size grid must be non-empty"));
            }
            for (j, eta) in grid.iter().enumerate() {
                if !(*eta > 0.0 && eta.is_finite()) {
                    return Err(HarnessError::config(format!("{key}.step_sizes[{j}]"), format!("step size must be positive, got {eta}")));
                }
            }
            if grid.iter().enumerate().any(|(j, a)| grid[..j].contains(a)) {
                return Err(HarnessError::config(format!("{key}.step_sizes"), "step sizes must be distinct"));
            }
            if m.averaging.is_some() && m.id.report() != viopt_core::solvers::Report::Average {
                return Err(HarnessError::config(format!("{key}.averaging"), format!("{} reports its last iterate", m.id.as_str())));
            }
            if let Some(avg) = &m.averaging {
                avg.validate().map_err(|e| HarnessError::config(format!("{key}.averaging"), e.to_string()))?;
            }
            m.id.check_hyper(&m.hyper, &format!("{key}.hyper"))?;
        }
        if let Some(r) = self.merit_radius {
            if self.metric != MetricChoice::Merit {
                return Err(HarnessError::config("merit_radius", "only used with metric \"merit\""));
            }
            if !(r > 0.0 && r.is_finite()) {
                return Err(HarnessError::config("merit_radius", format!("must be positive, got {r}")));
            }
        }
        if let Some(start) = &self.start {
            if start.iter().any(|v| !v.is_finite()) {
                return Err(HarnessError::config("start", "start must be finite"));
            }
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<ProblemInstance> {
        let p = &self.problem;
        let params = Value::Object(p.parameters.clone());
        let key = "problem.parameters";
        let built = match p.kind {
            ProblemKind::Bilinear1d => {
                typed::<NoParameters>(params, key)?;
                Ok(make_bilinear_1d())
            }
            ProblemKind::StochasticBilinear => {
                let q: StochasticBilinearParameters = typed(params, key)?;
                make_stochastic_bilinear(q.n, q.d, q.noise_scale, p.seed)
            }
            ProblemKind::StronglyMonotone => {
                let q: StronglyMonotoneParameters = typed(params, key)?;
                let eq = Point::new(q.equilibrium.to_vec())?;
                match q.bounds {
                    None => make_strongly_monotone(q.mu, q.gamma, eq),
                    Some([lo, hi]) => make_strongly_monotone_boxed(q.mu, q.gamma, eq, lo, hi),
                }
            }
            ProblemKind::ToyGan => {
                let q: ToyGanParameters = typed(params, key)?;
                if !q.omega_star.is_finite() {
                    return Err(HarnessError::config("problem.parameters.omega_star", "must be finite"));
                }
                Ok(make_toy_gan(q.omega_star))
            }
            ProblemKind::LinearWgan => {
                let q: LinearWganParameters = typed(params, key)?;
                make_linear_wgan(q.mean_x, q.mean_z, q.critic_ball)
            }
        };
        let problem = built.map_err(|e| HarnessError::config("problem", e.to_string()))?;
        if let Some(start) = &self.start {
            if start.len() != problem.dim() {
                return Err(HarnessError::config(
                    "start",
                    format!("expected {} coordinates, found {}", problem.dim(), start.len()),
                ));
            }
        }
        Ok(problem)
    }

    /// The explicit metric passed to the solvers; `None` lets them pick the
    /// distance to the solution or reference point.
    pub fn merit_spec(&self) -> Option<MeritSpec> {
        match self.metric {
            MetricChoice::Distance => None,
            MetricChoice::Merit => Some(MeritSpec::BilinearSaddleMerit { radius: self.merit_radius }),
        }
    }
}
