//! Closed-form checks behind `viopt verify`.
//!
//! All settings are pinned here:
//!
//! * norm laws on the rotation game `θ·φ` from `(1, 1)`, 100 steps: simultaneous
//!   steps grow `‖ω‖²` by `1 + η²`, implicit steps shrink it by `1/(1 + η²)`,
//!   extragradient steps by `1 − η² + η⁴` (relative error ≤ 1e-12 per step);
//! * alternated steps with `η = 0.1` for 10⁴ steps stay in the band
//!   `[N₀/κ², κ²N₀]` with `κ² = (2 + η)/(2 − η)`, and their uniform average
//!   satisfies `t²‖ω̄_t‖² ≤ 4κ²N₀((1 + η)² + 1)/η²`;
//! * extrapolation from the past with `η = 1/(4L)` and `d₋₁ = F(ω₀)` on the
//!   strongly monotone game `μ = 0.1, γ = 1`, solution `(0.5, −0.5)`, start
//!   `(1.8, 1.5)`, satisfies `‖ω_t − ω*‖² ≤ (1 − μ/(4L))ᵗ‖ω₀ − ω*‖² + 1e-9` for
//!   `t ≤ 500`, with and without the box `[−2, 2]²`;
//! * negative controls with `η = 0.1`, 1000 steps: simultaneous and Nesterov
//!   (`β = 0.9`) keep at least 0.9 of the initial distance, extragradient and
//!   extrapolation from the past end below 1e-2 of it;
//! * half-iterates of extrapolation from the past obey the optimistic mirror
//!   descent recursion `ω_{t+1/2} = ω_{t−1/2} − 2ηF(ω_{t−1/2}) + ηF(ω_{t−3/2})`
//!   to 1e-12 for 100 steps;
//! * zero-noise stochastic runs equal deterministic step sequences bitwise;
//! * the toy GAN operator matches central differences of its payoffs.

use viopt_core::linalg::{dist, norm, norm_sq};
use viopt_core::metrics::check_gradient_fd;
use viopt_core::problems::{
    make_bilinear_1d, make_stochastic_bilinear, make_strongly_monotone, make_strongly_monotone_boxed, make_toy_gan,
};
use viopt_core::rng::{stream, Role};
use viopt_core::solvers::*;
use viopt_core::{evaluate, ConstraintSet, Point, VectorField};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Check {
        Check { name, passed, detail }
    }
}

const FREE: ConstraintSet = ConstraintSet::Unconstrained;

/// Worst relative deviation of `‖ω_{t+1}‖²/‖ω_t‖²` from `expected`.
fn worst_ratio_error(mut step: impl FnMut(&[f64]) -> Vec<f64>, expected: f64, steps: usize) -> f64 {
    let mut w = vec![1.0, 1.0];
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let next = step(&w);
        let r = norm_sq(&next) / norm_sq(&w);
        worst = worst.max(((r - expected) / expected).abs());
        w = next;
    }
    worst
}

fn norm_laws(name: &'static str, etas: &[f64], law: impl Fn(f64) -> f64, step: impl Fn(&dyn VectorField, &[f64], f64) -> Vec<f64>) -> Check {
    let p = make_bilinear_1d();
    let worst = etas
        .iter()
        .map(|&eta| worst_ratio_error(|w| step(p.field(), w, eta), law(eta), 100))
        .fold(0.0, f64::max);
    Check::new(name, worst <= 1e-12, format!("max relative error {worst:.2e}"))
}

fn alternated_band() -> Check {
    let p = make_bilinear_1d();
    let eta: f64 = 0.1;
    let kappa2 = (2.0 + eta) / (2.0 - eta);
    let mut w = vec![1.0, 1.0];
    let n0 = norm_sq(&w);
    let c = 4.0 * kappa2 * n0 * ((1.0 + eta).powi(2) + 1.0) / (eta * eta);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut sum = [0.0; 2];
    let mut worst_avg: f64 = 0.0;
    let (mut first_half, mut second_half) = (0.0, 0.0);
    const T: usize = 10_000;
    for t in 1..=T {
        w = step_alternated(p.field(), &FREE, &w, eta).expect("valid step");
        let n = norm_sq(&w);
        lo = lo.min(n / n0);
        hi = hi.max(n / n0);
        if t <= T / 2 {
            first_half += n.ln();
        } else {
            second_half += n.ln();
        }
        sum[0] += w[0];
        sum[1] += w[1];
        if t >= 100 {
            worst_avg = worst_avg.max(norm_sq(&sum) / c);
        }
    }
    let drift = (second_half - first_half).abs() / (T / 2) as f64;
    let passed = lo >= 1.0 / kappa2 - 1e-12 && hi <= kappa2 + 1e-12 && drift < 1e-2 && worst_avg <= 1.0;
    Check::new(
        "alternated steps stay bounded and their average decays as 1/t",
        passed,
        format!("N/N0 in [{lo:.4}, {hi:.4}], band [{:.4}, {kappa2:.4}], mean log drift {drift:.1e}, max t²|avg|²/C {worst_avg:.3}", 1.0 / kappa2),
    )
}

fn linear_rate() -> Check {
    let (mu, gamma) = (0.1, 1.0);
    let eq = Point::new(vec![0.5, -0.5]).expect("finite");
    let problems = [
        make_strongly_monotone(mu, gamma, eq.clone()),
        make_strongly_monotone_boxed(mu, gamma, eq.clone(), -2.0, 2.0),
    ];
    let mut worst = f64::NEG_INFINITY;
    for p in problems {
        let p = p.expect("valid problem");
        let l = p.constants().expect("known constants").lipschitz;
        let opts = RunOptions::constant(1.0 / (4.0 * l), 500)
            .with_start(vec![1.8, 1.5])
            .with_stride(1)
            .with_averaging(AveragingScheme::None)
            .with_past_init(PastGradientInit::AtStart);
        let run = run_avg_past_extra_sgd(&p, &opts).expect("valid run");
        let n0 = dist(&run.trajectory[0].1, eq.as_slice()).powi(2);
        for (t, w) in &run.trajectory {
            let bound = (1.0 - mu / (4.0 * l)).powi(*t as i32) * n0 + 1e-9;
            worst = worst.max(dist(w, eq.as_slice()).powi(2) - bound);
        }
    }
    Check::new(
        "extrapolation from the past converges linearly on a strongly monotone game",
        worst <= 0.0,
        format!("max excess over the bound {worst:.2e}"),
    )
}

fn negative_controls() -> Check {
    let p = make_bilinear_1d();
    let opts = RunOptions::constant(0.1, 1000).with_start(vec![1.0, 1.0]).with_averaging(AveragingScheme::None);
    let d0 = 2f64.sqrt();
    let end = |rule| {
        let run = run_rule(&p, rule, &opts).expect("valid run");
        if run.diverged { f64::INFINITY } else { norm(&run.last) / d0 }
    };
    let sim = end(Rule::Simultaneous);
    let nesterov = end(Rule::Nesterov { beta: 0.9 });
    let extra = end(Rule::Extragradient { reuse_sample: false });
    let past = end(Rule::PastExtragradient);
    Check::new(
        "only extrapolation methods converge on the rotation game",
        sim >= 0.9 && nesterov >= 0.9 && extra < 1e-2 && past < 1e-2,
        format!("final/initial distance: simultaneous {sim:.3e}, nesterov {nesterov:.3e}, extragradient {extra:.3e}, past {past:.3e}"),
    )
}

fn omd_identity() -> Check {
    let p = make_strongly_monotone(0.05, 1.0, Point::new(vec![0.2, -0.3]).expect("finite")).expect("valid problem");
    let f = p.field();
    let eta = 0.1;
    let mut w = vec![1.0, 2.0];
    let mut stored = vec![0.0; 2];
    let mut halves = Vec::new();
    for _ in 0..100 {
        let (half, next, g) = step_extrapolation_from_past(f, &FREE, &w, &stored, eta).expect("valid step");
        halves.push(half);
        w = next;
        stored = g;
    }
    let mut worst: f64 = 0.0;
    for t in 2..halves.len() {
        let g1 = evaluate(f, &halves[t - 1]).expect("finite");
        let g2 = evaluate(f, &halves[t - 2]).expect("finite");
        for i in 0..2 {
            worst = worst.max((halves[t][i] - (halves[t - 1][i] - 2.0 * eta * g1[i] + eta * g2[i])).abs());
        }
    }
    Check::new("past extrapolation is optimistic mirror descent", worst <= 1e-12, format!("max deviation {worst:.2e}"))
}

fn zero_noise() -> Check {
    let p = make_stochastic_bilinear(8, 3, 0.0, 5).expect("valid problem");
    let (f, set) = (p.field(), p.constraints());
    let eta = 0.05;
    let start = vec![0.3, -0.2, 0.1, 0.9, -0.4, 0.5];
    let opts = RunOptions::constant(eta, 100).with_start(start.clone()).with_seed(1).with_batch(4);
    let repeat = |step: &dyn Fn(&[f64]) -> Vec<f64>| (0..100).fold(start.clone(), |w, _| step(&w));
    let sim = repeat(&|w| step_simultaneous(f, set, w, eta).expect("valid step"));
    let extra = repeat(&|w| step_extragradient(f, set, w, eta).expect("valid step").1);
    let mut w = start.clone();
    let mut stored = vec![0.0; 6];
    for _ in 0..100 {
        let (_, next, g) = step_extrapolation_from_past(f, set, &w, &stored, eta).expect("valid step");
        w = next;
        stored = g;
    }
    let ok = run_avg_sgd(&p, &opts).map(|r| r.last == sim).unwrap_or(false)
        && run_avg_extra_sgd(&p, &opts).map(|r| r.last == extra).unwrap_or(false)
        && run_re_extra_sgd(&p, &opts).map(|r| r.last == extra).unwrap_or(false)
        && run_avg_past_extra_sgd(&p, &opts).map(|r| r.last == w).unwrap_or(false);
    Check::new("noise-free stochastic runs equal deterministic steps", ok, "bitwise comparison over 100 steps".into())
}

fn gan_gradient() -> Check {
    use rand::Rng;
    let p = make_toy_gan(-2.0);
    let mut rng = stream(11, Role::Probe);
    let points: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]).collect();
    match check_gradient_fd(p.field(), &points, viopt_core::metrics::FD_STEP) {
        Ok(r) => Check::new(
            "toy GAN operator matches finite differences",
            r.max_rel_error <= 1e-5,
            format!("max relative error {:.2e} over {} points", r.max_rel_error, r.points_checked),
        ),
        Err(e) => Check::new("toy GAN operator matches finite differences", false, e.to_string()),
    }
}

/// Runs every check; takes well under a second in release builds.
pub fn run_checks() -> Vec<Check> {
    vec![
        norm_laws("simultaneous steps grow the squared norm by 1 + η²", &[0.5, 0.1, 0.01], |e| 1.0 + e * e, |f, w, e| {
            step_simultaneous(f, &FREE, w, e).expect("valid step")
        }),
        alternated_band(),
        norm_laws("implicit steps shrink the squared norm by 1/(1 + η²)", &[0.5, 0.1], |e| 1.0 / (1.0 + e * e), |f, w, e| {
            step_implicit(f, w, e).expect("affine field")
        }),
        norm_laws("extragradient shrinks the squared norm by 1 − η² + η⁴", &[0.5, 0.1], |e| 1.0 - e * e + e.powi(4), |f, w, e| {
            step_extragradient(f, &FREE, w, e).expect("valid step").1
        }),
        linear_rate(),
        negative_controls(),
        omd_identity(),
        zero_noise(),
        gan_gradient(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        for c in run_checks() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
