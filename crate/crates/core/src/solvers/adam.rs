//! Adam with an extrapolation step, and plain Adam baselines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::ProblemInstance;

use super::averaging::Averager;
use super::oracle::Oracle;
use super::run::{blew_up, Recorder, Stepper};
use super::steps::block_sets;
use super::{RunOptions, SolverRun};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

/// Where the extrapolation step of Extra-Adam takes its gradient from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationOption {
    /// A fresh gradient at `ω_t`.
    Standard,
    /// The gradient saved at the previous extrapolated point. At `t = 0` it is
    /// initialised with a fresh gradient at `ω₀`.
    FromPast,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdamMode {
    Simultaneous,
    /// `k` updates of player two per update of player one.
    Alternated { k: usize },
}

/// Divisors `(1 − β^{2t−1}, 1 − β^{2t})` of the extrapolation and update steps
/// of outer iteration `t ≥ 1`.
pub fn bias_corrections(beta: f64, t: usize) -> (f64, f64) {
    let t = t as i32;
    (1.0 - beta.powi(2 * t - 1), 1.0 - beta.powi(2 * t))
}

/// Moment estimates of Adam. `step_count` counts moment updates; Extra-Adam
/// performs two per outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step_count: u32,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(dim: usize, hyper: AdamHyper) -> Self {
        AdamState { m: vec![0.0; dim], v: vec![0.0; dim], step_count: 0, hyper }
    }

    /// Updates the moments with `g` and returns the bias-corrected direction
    /// `m̂ / (√v̂ + ε)`.
    pub fn advance(&mut self, g: &[f64]) -> Vec<f64> {
        let AdamHyper { beta1, beta2, eps } = self.hyper;
        self.step_count += 1;
        let c1 = 1.0 - beta1.powi(self.step_count as i32);
        let c2 = 1.0 - beta2.powi(self.step_count as i32);
        self.m.iter_mut().zip(g).for_each(|(m, gi)| *m = beta1 * *m + (1.0 - beta1) * gi);
        self.v.iter_mut().zip(g).for_each(|(v, gi)| *v = beta2 * *v + (1.0 - beta2) * gi * gi);
        self.m.iter().zip(&self.v).map(|(m, v)| (m / c1) / ((v / c2).sqrt() + eps)).collect()
    }
}

/// Extra-Adam. Each outer iteration updates the moments twice: with the
/// extrapolation gradient (bias exponent `2t+1`, counting `t` from 0) and with
/// the gradient at the extrapolated point (exponent `2t+2`). Both steps start
/// from `ω_t`. The average is taken over the extrapolated points.
pub fn run_extra_adam(
    problem: &ProblemInstance,
    hyper: AdamHyper,
    option: ExtrapolationOption,
    opts: &RunOptions,
) -> Result<SolverRun> {
    opts.validate(problem)?;
    hyper.validate()?;
    let set = problem.constraints();
    let dim = problem.dim();
    let stepper = Stepper::new(problem, opts);
    let mut oracle = Oracle::new(problem.field(), opts.batch, opts.seed);
    let mut w = opts.start_point(problem);
    let mut averager = Averager::new(opts.averaging, dim)?;
    let mut rec = Recorder::new(problem, opts, &w);
    rec.record(0, 0, &w, None)?;

    let mut state = AdamState::new(dim, hyper);
    let mut g = vec![0.0; dim];
    let mut diverged = false;
    if option == ExtrapolationOption::FromPast {
        diverged = !oracle.sample(&w, &mut g).1;
    }
    let mut last_half = None;
    let mut completed = 0;

    for t in 0..opts.iters {
        if diverged {
            break;
        }
        let eta = opts.schedule.at(t);
        let ok1 = match option {
            ExtrapolationOption::Standard => oracle.sample(&w, &mut g).1,
            ExtrapolationOption::FromPast => true,
        };
        let dir = state.advance(&g);
        let half = stepper.step(set, &w, eta, &dir);
        let ok2 = oracle.sample(&half, &mut g).1;
        let dir = state.advance(&g);
        let next = stepper.step(set, &w, eta, &dir);

        averager.update(&half, eta)?;
        let bad = !(ok1 && ok2) || blew_up(&half) || blew_up(&next);
        last_half = Some(half);
        w = next;
        completed = t + 1;
        if bad {
            diverged = true;
            rec.record(completed, oracle.evals, &w, averager.value())?;
            break;
        }
        if rec.due(completed) {
            rec.record(completed, oracle.evals, &w, averager.value())?;
        }
    }
    let label = match option {
        ExtrapolationOption::Standard => "extra_adam",
        ExtrapolationOption::FromPast => "past_extra_adam",
    };
    Ok(rec.finish(label.into(), opts, w, &averager, last_half, (oracle.evals, oracle.draws), diverged, completed))
}

/// Adam without extrapolation. `Simultaneous` updates both players from the
/// same gradient. `Alternated { k }` keeps separate moment estimates per
/// player, updates player one, then performs `k` updates of player two, each
/// with a fresh gradient at the current point.
pub fn run_baseline_adam(
    problem: &ProblemInstance,
    hyper: AdamHyper,
    mode: AdamMode,
    opts: &RunOptions,
) -> Result<SolverRun> {
    opts.validate(problem)?;
    hyper.validate()?;
    let set = problem.constraints();
    let dim = problem.dim();
    let stepper = Stepper::new(problem, opts);
    let blocks = match mode {
        AdamMode::Simultaneous => None,
        AdamMode::Alternated { k } => {
            if k == 0 {
                return Err(Error::InvalidParameter("alternated Adam needs k ≥ 1".into()));
            }
            let split = problem.field().block_split().ok_or(Error::MissingBlockSplit)?;
            Some((split, block_sets(set, split, dim)?))
        }
    };
    let mut oracle = Oracle::new(problem.field(), opts.batch, opts.seed);
    let mut w = opts.start_point(problem);
    let mut averager = Averager::new(opts.averaging, dim)?;
    let mut rec = Recorder::new(problem, opts, &w);
    rec.record(0, 0, &w, None)?;

    let mut g = vec![0.0; dim];
    let mut joint = AdamState::new(dim, hyper);
    let split = blocks.as_ref().map_or(dim, |b| b.0);
    let mut theta_state = AdamState::new(split, hyper);
    let mut phi_state = AdamState::new(dim - split, hyper);
    let mut diverged = false;
    let mut completed = 0;

    for t in 0..opts.iters {
        let eta = opts.schedule.at(t);
        let (next, ok) = match (&blocks, mode) {
            (None, _) => {
                let ok = oracle.sample(&w, &mut g).1;
                let dir = joint.advance(&g);
                (stepper.step(set, &w, eta, &dir), ok)
            }
            (Some((split, (set_theta, set_phi))), AdamMode::Alternated { k }) => {
                let [e0, e1] = stepper.etas(eta);
                let mut ok = oracle.sample(&w, &mut g).1;
                let mut next = w.clone();
                let dir = theta_state.advance(&g[..*split]);
                next[..*split].iter_mut().zip(&dir).for_each(|(x, d)| *x -= e0 * d);
                set_theta.project_in_place(&mut next[..*split]);
                for _ in 0..k {
                    ok &= oracle.sample(&next, &mut g).1;
                    let dir = phi_state.advance(&g[*split..]);
                    next[*split..].iter_mut().zip(&dir).for_each(|(x, d)| *x -= e1 * d);
                    set_phi.project_in_place(&mut next[*split..]);
                }
                (next, ok)
            }
            (Some(_), AdamMode::Simultaneous) => unreachable!("blocks exist only in alternated mode"),
        };
        averager.update(&w, eta)?;
        w = next;
        completed = t + 1;
        if !ok || blew_up(&w) {
            diverged = true;
            rec.record(completed, oracle.evals, &w, averager.value())?;
            break;
        }
        if rec.due(completed) {
            rec.record(completed, oracle.evals, &w, averager.value())?;
        }
    }
    let label = match mode {
        AdamMode::Simultaneous => "sim_adam".to_string(),
        AdamMode::Alternated { k } => format!("alt_adam{k}"),
    };
    Ok(rec.finish(label, opts, w, &averager, None, (oracle.evals, oracle.draws), diverged, completed))
}
