//! The shared run loop for the gradient-type rules.

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::metrics::MeritSpec;
use crate::problems::ProblemInstance;

use super::averaging::Averager;
use super::oracle::Oracle;
use super::steps::{block_sets, step_implicit};
use super::{MetricPoint, PastGradientInit, RunOptions, SolverRun, DIVERGENCE_NORM};

/// The per-iteration update of [`run_rule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// `ω_{t+1} = P[ω_t − η_t F(ω_t, ξ_t)]`; averages `ω_t`.
    Simultaneous,
    /// Player one steps, then player two steps against the new `θ`, each on a
    /// fresh minibatch; averages `ω_t`.
    Alternated,
    /// Extrapolate with `F(ω_t, ξ_t)`, update with `F(ω'_t, ξ'_t)`; averages `ω'_t`.
    /// With `reuse_sample` the update uses `ξ'_t = ξ_t`.
    Extragradient { reuse_sample: bool },
    /// Extrapolate with the stored gradient, update with `F(ω'_t, ξ_t)` and
    /// store it; averages `ω'_t`.
    PastExtragradient,
    /// `ω_{t+1} = ω_t − η_t F(ω_{t+1})` for affine fields; averages `ω_t`.
    /// Unconstrained only.
    Implicit,
    /// `ω_{t+1/2} = ω_t − η_t F(ω_t)`, `ω_{t+1} = ω_{t+1/2} + β(ω_{t+1/2} − ω_{t−1/2})`;
    /// averages `ω_t`. Unconstrained only.
    Nesterov { beta: f64 },
}

impl Rule {
    pub fn label(&self) -> &'static str {
        match self {
            Rule::Simultaneous => "simultaneous",
            Rule::Alternated => "alternated",
            Rule::Extragradient { reuse_sample: false } => "extragradient",
            Rule::Extragradient { reuse_sample: true } => "reused_sample_extragradient",
            Rule::PastExtragradient => "past_extragradient",
            Rule::Implicit => "implicit",
            Rule::Nesterov { .. } => "nesterov",
        }
    }
}

pub(crate) fn blew_up(x: &[f64]) -> bool {
    let n = norm(x);
    !(n <= DIVERGENCE_NORM)
}

/// Applies per-player step sizes: `P[ω − η·s_b·g]` with `s_b` the scale of the
/// block owning each coordinate.
pub(crate) struct Stepper {
    split: usize,
    scales: [f64; 2],
}

impl Stepper {
    pub fn new(problem: &ProblemInstance, opts: &RunOptions) -> Self {
        Stepper { split: problem.field().block_split().unwrap_or(problem.dim()), scales: opts.player_scales }
    }

    pub fn etas(&self, eta: f64) -> [f64; 2] {
        [eta * self.scales[0], eta * self.scales[1]]
    }

    pub fn step(&self, set: &ConstraintSet, omega: &[f64], eta: f64, g: &[f64]) -> Vec<f64> {
        let [e0, e1] = self.etas(eta);
        let mut out: Vec<f64> = omega
            .iter()
            .zip(g)
            .enumerate()
            .map(|(i, (w, gi))| {
                let e = if i < self.split { e0 } else { e1 };
                w - e * gi
            })
            .collect();
        set.project_in_place(&mut out);
        out
    }

    pub fn split(&self) -> usize {
        self.split
    }
}

/// Metric series and trajectory bookkeeping shared by the run loops.
pub(crate) struct Recorder<'p> {
    problem: &'p ProblemInstance,
    metric: Option<MeritSpec>,
    reference: Vec<f64>,
    stride: usize,
    iters: usize,
    record_trajectory: bool,
    metrics: Vec<MetricPoint>,
    trajectory: Vec<(usize, Vec<f64>)>,
}

impl<'p> Recorder<'p> {
    pub fn new(problem: &'p ProblemInstance, opts: &RunOptions, start: &[f64]) -> Self {
        Recorder {
            problem,
            metric: opts.resolved_metric(problem),
            reference: start.to_vec(),
            stride: opts.stride,
            iters: opts.iters,
            record_trajectory: opts.record_trajectory,
            metrics: Vec::new(),
            trajectory: Vec::new(),
        }
    }

    pub fn due(&self, t: usize) -> bool {
        t.is_multiple_of(self.stride) || t == self.iters
    }

    pub fn record(&mut self, t: usize, evals: u64, last: &[f64], average: Option<&[f64]>) -> Result<()> {
        if let Some(m) = &self.metric {
            let l = m.evaluate(self.problem, last, &self.reference)?;
            let a = match average {
                Some(avg) => m.evaluate(self.problem, avg, &self.reference)?,
                None => l,
            };
            self.metrics.push(MetricPoint { iter: t, evals, last: l, average: a });
        }
        if self.record_trajectory {
            self.trajectory.push((t, last.to_vec()));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    pub fn finish(
        self,
        method: String,
        opts: &RunOptions,
        last: Vec<f64>,
        averager: &Averager,
        half: Option<Vec<f64>>,
        counts: (u64, u64),
        diverged: bool,
        iters_completed: usize,
    ) -> SolverRun {
        SolverRun {
            method,
            options: opts.clone(),
            metric_name: self.metric.as_ref().map(MeritSpec::name),
            metrics: self.metrics,
            trajectory: self.trajectory,
            last,
            average: averager.value().map(<[f64]>::to_vec),
            half,
            eval_count: counts.0,
            draw_count: counts.1,
            diverged,
            iters_completed,
        }
    }
}

/// Runs `rule` for `opts.iters` iterations.
///
/// Fields without finite-sum structure are evaluated exactly. A non-finite
/// estimate or an iterate with norm above [`DIVERGENCE_NORM`] stops the run
/// with `diverged` set.
pub fn run_rule(problem: &ProblemInstance, rule: Rule, opts: &RunOptions) -> Result<SolverRun> {
    opts.validate(problem)?;
    let field = problem.field();
    let set = problem.constraints();
    let dim = problem.dim();
    let stepper = Stepper::new(problem, opts);

    let blocks = match rule {
        Rule::Alternated => {
            let split = field.block_split().ok_or(Error::MissingBlockSplit)?;
            Some(block_sets(set, split, dim)?)
        }
        _ => None,
    };
    match rule {
        Rule::Implicit => {
            if !set.is_unconstrained() {
                return Err(Error::RequiresUnconstrained { rule: "implicit" });
            }
            field.affine().ok_or(Error::NonAffine)?;
            if opts.player_scales != [1.0, 1.0] {
                return Err(Error::InvalidParameter("implicit steps take a single step size".into()));
            }
        }
        Rule::Nesterov { beta } => {
            if !set.is_unconstrained() {
                return Err(Error::RequiresUnconstrained { rule: "nesterov" });
            }
            if !beta.is_finite() {
                return Err(Error::InvalidParameter(format!("momentum must be finite, got {beta}")));
            }
        }
        _ => {}
    }

    let mut oracle = Oracle::new(field, opts.batch, opts.seed);
    let mut w = opts.start_point(problem);
    let mut averager = Averager::new(opts.averaging, dim)?;
    let mut rec = Recorder::new(problem, opts, &w);
    rec.record(0, 0, &w, None)?;

    let mut g = vec![0.0; dim];
    let mut g2 = vec![0.0; dim];
    let mut stored = vec![0.0; dim];
    let mut prev_half = w.clone();
    let mut last_half: Option<Vec<f64>> = None;
    let mut diverged = false;
    let mut completed = 0;

    if rule == Rule::PastExtragradient && opts.past_init == PastGradientInit::AtStart {
        diverged = !oracle.sample(&w, &mut stored).1;
    }

    for t in 0..opts.iters {
        if diverged {
            break;
        }
        let eta = opts.schedule.at(t);
        let (fed, next, ok) = match rule {
            Rule::Simultaneous => {
                let ok = oracle.sample(&w, &mut g).1;
                let next = stepper.step(set, &w, eta, &g);
                (w.clone(), next, ok)
            }
            Rule::Alternated => {
                let (set_theta, set_phi) = blocks.as_ref().expect("checked above");
                let split = stepper.split();
                let [e0, e1] = stepper.etas(eta);
                let ok1 = oracle.sample(&w, &mut g).1;
                let mut next = w.clone();
                next[..split].iter_mut().zip(&g[..split]).for_each(|(x, gi)| *x -= e0 * gi);
                set_theta.project_in_place(&mut next[..split]);
                let ok2 = oracle.sample(&next, &mut g2).1;
                next[split..].iter_mut().zip(&g2[split..]).for_each(|(x, gi)| *x -= e1 * gi);
                set_phi.project_in_place(&mut next[split..]);
                (w.clone(), next, ok1 && ok2)
            }
            Rule::Extragradient { reuse_sample } => {
                let (batch, ok1) = oracle.sample(&w, &mut g);
                let half = stepper.step(set, &w, eta, &g);
                let batch2 = if reuse_sample { batch } else { oracle.draw() };
                let ok2 = oracle.eval(&half, &batch2, &mut g2);
                let next = stepper.step(set, &w, eta, &g2);
                last_half = Some(half.clone());
                (half, next, ok1 && ok2)
            }
            Rule::PastExtragradient => {
                let half = stepper.step(set, &w, eta, &stored);
                let ok = oracle.sample(&half, &mut stored).1;
                let next = stepper.step(set, &w, eta, &stored);
                last_half = Some(half.clone());
                (half, next, ok)
            }
            Rule::Implicit => {
                oracle.evals += 1;
                let next = step_implicit(field, &w, eta)?;
                (w.clone(), next, true)
            }
            Rule::Nesterov { beta } => {
                let ok = oracle.sample(&w, &mut g).1;
                let half = stepper.step(set, &w, eta, &g);
                let next: Vec<f64> = half.iter().zip(&prev_half).map(|(h, p)| h + beta * (h - p)).collect();
                prev_half = half.clone();
                last_half = Some(half);
                (w.clone(), next, ok)
            }
        };
        averager.update(&fed, eta)?;
        w = next;
        completed = t + 1;
        if !ok || blew_up(&w) || blew_up(&fed) {
            diverged = true;
            rec.record(completed, oracle.evals, &w, averager.value())?;
            break;
        }
        if rec.due(completed) {
            rec.record(completed, oracle.evals, &w, averager.value())?;
        }
    }

    let counts = (oracle.evals, oracle.draws);
    Ok(rec.finish(rule.label().to_string(), opts, w, &averager, last_half, counts, diverged, completed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{make_bilinear_1d, make_stochastic_bilinear};
    use crate::solvers::AveragingScheme;

    #[test]
    fn averaged_sgd_two_steps() {
        let p = make_bilinear_1d();
        let opts = RunOptions::constant(0.1, 2).with_start(vec![1.0, 1.0]);
        let run = run_rule(&p, Rule::Simultaneous, &opts).unwrap();
        let avg = run.average.unwrap();
        assert!((avg[0] - 0.95).abs() < 1e-15 && (avg[1] - 1.05).abs() < 1e-15);
        assert_eq!(run.eval_count, 2);
    }

    #[test]
    fn counters() {
        let p = make_stochastic_bilinear(10, 2, 0.5, 1).unwrap();
        let opts = RunOptions::constant(0.05, 40).with_seed(3);
        let count = |rule| {
            let r = run_rule(&p, rule, &opts).unwrap();
            (r.eval_count, r.draw_count)
        };
        assert_eq!(count(Rule::Simultaneous), (40, 40));
        assert_eq!(count(Rule::Extragradient { reuse_sample: false }), (80, 80));
        assert_eq!(count(Rule::Extragradient { reuse_sample: true }), (80, 40));
        assert_eq!(count(Rule::PastExtragradient), (40, 40));
        assert_eq!(count(Rule::Alternated), (80, 80));
        let at_start = opts.clone().with_past_init(PastGradientInit::AtStart);
        let r = run_rule(&p, Rule::PastExtragradient, &at_start).unwrap();
        assert_eq!((r.eval_count, r.draw_count), (41, 41));
    }

    #[test]
    fn metric_series_is_strided_and_increasing() {
        let p = make_bilinear_1d();
        let opts = RunOptions::constant(0.1, 25).with_start(vec![1.0, 1.0]).with_stride(10);
        let run = run_rule(&p, Rule::Extragradient { reuse_sample: false }, &opts).unwrap();
        let iters: Vec<usize> = run.metrics.iter().map(|m| m.iter).collect();
        assert_eq!(iters, vec![0, 10, 20, 25]);
        assert_eq!(run.trajectory.len(), 4);
        assert_eq!(run.metric_name, Some("distance"));
    }

    #[test]
    fn divergence_is_flagged_not_fatal() {
        let p = make_bilinear_1d();
        let opts = RunOptions::constant(3.0, 10_000).with_start(vec![1.0, 1.0]).with_averaging(AveragingScheme::None);
        let run = run_rule(&p, Rule::Simultaneous, &opts).unwrap();
        assert!(run.diverged);
        assert!(run.iters_completed < 10_000);
        assert_eq!(run.metrics.last().unwrap().iter, run.iters_completed);
    }

    #[test]
    fn replays_are_identical() {
        let p = make_stochastic_bilinear(20, 3, 0.5, 2).unwrap();
        let opts = RunOptions::constant(0.05, 300).with_seed(9).with_batch(3);
        let a = run_rule(&p, Rule::Extragradient { reuse_sample: false }, &opts).unwrap();
        let b = run_rule(&p, Rule::Extragradient { reuse_sample: false }, &opts).unwrap();
        assert_eq!(a, b);
        let c = run_rule(&p, Rule::Extragradient { reuse_sample: false }, &opts.clone().with_seed(10)).unwrap();
        assert_ne!(a.metrics, c.metrics);
    }

    #[test]
    fn invalid_options() {
        let p = make_bilinear_1d();
        assert_eq!(run_rule(&p, Rule::Simultaneous, &RunOptions::constant(0.1, 0)).unwrap_err(), Error::ZeroIterations);
        assert!(run_rule(&p, Rule::Simultaneous, &RunOptions::constant(-0.1, 5)).is_err());
        let boxed = p.with_constraints(ConstraintSet::cube(2, -1.0, 1.0).unwrap()).unwrap();
        assert_eq!(
            run_rule(&boxed, Rule::Nesterov { beta: 0.9 }, &RunOptions::constant(0.1, 5)).unwrap_err(),
            Error::RequiresUnconstrained { rule: "nesterov" }
        );
    }
}
