//! Bilinear saddle-point games `L(θ, φ) = θᵀMφ + θᵀa + φᵀb`, deterministic or
//! as a finite sum over per-sample `(M⁽ⁱ⁾, a⁽ⁱ⁾, b⁽ⁱ⁾)`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::field::{AffineForm, Payoffs, VectorField};
use crate::linalg::{dot, norm, solve, Matrix};
use crate::point::Point;
use crate::rng::{self, Role};

use super::{Constants, FieldSource, ProblemInstance};

/// Condition numbers above this make the equilibrium solve ill-posed.
pub const MAX_CONDITION: f64 = 1e12;

/// Equilibrium coordinates are drawn from `[-EQUILIBRIUM_BOUND, EQUILIBRIUM_BOUND]`,
/// strictly inside the `[-1, 1]` box.
pub const EQUILIBRIUM_BOUND: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerSample {
    pub couplings: Vec<Matrix>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl PerSample {
    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }
}

/// Data of a bilinear game. The mean terms define the deterministic operator;
/// when `per_sample` is present its averages equal the means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearSpec {
    pub coupling: Matrix,
    pub a_bar: Vec<f64>,
    pub b_bar: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_sample: Option<PerSample>,
}

impl BilinearSpec {
    pub fn new(coupling: Matrix, a_bar: Vec<f64>, b_bar: Vec<f64>) -> Result<Self> {
        let spec = BilinearSpec { coupling, a_bar, b_bar, per_sample: None };
        spec.validate()?;
        Ok(spec)
    }

    /// Player dimension `d`; `θ` is `rows`-dimensional and `φ` is `cols`-dimensional.
    pub fn theta_dim(&self) -> usize {
        self.coupling.rows
    }

    pub fn phi_dim(&self) -> usize {
        self.coupling.cols
    }

    pub fn validate(&self) -> Result<()> {
        let (r, c) = (self.coupling.rows, self.coupling.cols);
        if r == 0 || c == 0 {
            return Err(Error::InvalidParameter("empty coupling matrix".into()));
        }
        if self.a_bar.len() != r {
            return Err(Error::DimensionMismatch { expected: r, found: self.a_bar.len() });
        }
        if self.b_bar.len() != c {
            return Err(Error::DimensionMismatch { expected: c, found: self.b_bar.len() });
        }
        if let Some(ps) = &self.per_sample {
            if ps.is_empty() || ps.a.len() != ps.len() || ps.b.len() != ps.len() {
                return Err(Error::InvalidParameter("per-sample lists must be non-empty and of equal length".into()));
            }
            for ((m, a), b) in ps.couplings.iter().zip(&ps.a).zip(&ps.b) {
                if m.rows != r || m.cols != c || a.len() != r || b.len() != c {
                    return Err(Error::InvalidParameter("per-sample term has the wrong shape".into()));
                }
            }
        }
        Ok(())
    }

    /// `L(θ, φ)` with the mean data.
    pub fn payoff(&self, theta: &[f64], phi: &[f64]) -> f64 {
        dot(theta, &self.coupling.mul_vec(phi)) + dot(theta, &self.a_bar) + dot(phi, &self.b_bar)
    }

    /// Largest deviation of the per-sample averages from the mean data.
    pub fn centering_error(&self) -> f64 {
        let Some(ps) = &self.per_sample else { return 0.0 };
        let n = ps.len() as f64;
        let mut worst = 0.0f64;
        for (k, target) in self.coupling.data.iter().enumerate() {
            let mean = ps.couplings.iter().map(|m| m.data[k]).sum::<f64>() / n;
            worst = worst.max((mean - target).abs());
        }
        for (j, target) in self.a_bar.iter().enumerate() {
            worst = worst.max((ps.a.iter().map(|a| a[j]).sum::<f64>() / n - target).abs());
        }
        for (j, target) in self.b_bar.iter().enumerate() {
            worst = worst.max((ps.b.iter().map(|b| b[j]).sum::<f64>() / n - target).abs());
        }
        worst
    }
}

/// `F(θ, φ) = (Mφ + a, −Mᵀθ − b)`.
fn bilinear_eval(m: &Matrix, a: &[f64], b: &[f64], point: &[f64], out: &mut [f64]) {
    let (theta, phi) = point.split_at(m.rows);
    let (out_t, out_p) = out.split_at_mut(m.rows);
    m.mul_vec_into(phi, out_t);
    for (o, ai) in out_t.iter_mut().zip(a) {
        *o += ai;
    }
    m.tr_mul_vec_into(theta, out_p);
    for (o, bi) in out_p.iter_mut().zip(b) {
        *o = -*o - bi;
    }
}

/// The operator of a bilinear game, a finite sum when per-sample data exist.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearField {
    spec: BilinearSpec,
}

impl BilinearField {
    pub fn new(spec: BilinearSpec) -> Result<Self> {
        spec.validate()?;
        Ok(BilinearField { spec })
    }
}

impl VectorField for BilinearField {
    fn dim(&self) -> usize {
        self.spec.theta_dim() + self.spec.phi_dim()
    }

    fn block_split(&self) -> Option<usize> {
        Some(self.spec.theta_dim())
    }

    fn eval_into(&self, point: &[f64], out: &mut [f64]) {
        bilinear_eval(&self.spec.coupling, &self.spec.a_bar, &self.spec.b_bar, point, out)
    }

    fn n_samples(&self) -> Option<usize> {
        self.spec.per_sample.as_ref().map(PerSample::len)
    }

    fn sample_eval_into(&self, point: &[f64], sample: usize, out: &mut [f64]) {
        match &self.spec.per_sample {
            Some(ps) => bilinear_eval(&ps.couplings[sample], &ps.a[sample], &ps.b[sample], point, out),
            None => self.eval_into(point, out),
        }
    }

    fn payoffs(&self) -> Option<&dyn Payoffs> {
        Some(self)
    }

    fn bilinear(&self) -> Option<&BilinearSpec> {
        Some(&self.spec)
    }

    /// The mean operator as `[[0, M], [−Mᵀ, 0]]·ω + (a, −b)`.
    fn affine(&self) -> Option<AffineForm> {
        let (p, q) = (self.spec.theta_dim(), self.spec.phi_dim());
        let n = p + q;
        let m = &self.spec.coupling;
        let mut matrix = Matrix::zeros(n, n);
        for r in 0..p {
            for c in 0..q {
                matrix.data[r * n + p + c] = m.get(r, c);
                matrix.data[(p + c) * n + r] = -m.get(r, c);
            }
        }
        let offset = self.spec.a_bar.iter().copied().chain(self.spec.b_bar.iter().map(|b| -b)).collect();
        Some(AffineForm { matrix, offset })
    }
}

impl Payoffs for BilinearField {
    fn costs(&self, point: &[f64]) -> (f64, f64) {
        let (theta, phi) = point.split_at(self.spec.theta_dim());
        let l = self.spec.payoff(theta, phi);
        (l, -l)
    }
}

/// The rotation game `min_θ max_φ θ·φ`, with `F(θ, φ) = (φ, −θ)` and solution `(0, 0)`.
pub fn make_bilinear_1d() -> ProblemInstance {
    let spec = BilinearSpec::new(Matrix::identity(1), vec![0.0], vec![0.0]).expect("static data");
    ProblemInstance::assemble(
        FieldSource::Bilinear { spec },
        ConstraintSet::Unconstrained,
        Some(Point::split(vec![0.0, 0.0], 1).expect("static data")),
        Some(Constants { mu: 0.0, lipschitz: 1.0, noise_sigma: 0.0 }),
        "bilinear_1d".into(),
        None,
    )
    .expect("static data")
}

/// The linear-generator, linear-critic WGAN objective
/// `min_θ max_φ φ·E[x] − φ·θ·E[z]` in one dimension.
///
/// As a bilinear game this is `M = −E[z]`, `a = 0`, `b = E[x]`, with solution
/// `(θ*, φ*) = (E[x]/E[z], 0)`. With `critic_ball` the critic is restricted to
/// `|φ| ≤ 1`.
pub fn make_linear_wgan(mean_x: f64, mean_z: f64, critic_ball: bool) -> Result<ProblemInstance> {
    if !mean_x.is_finite() || !mean_z.is_finite() || mean_z == 0.0 {
        return Err(Error::InvalidParameter("E[z] must be finite and non-zero".into()));
    }
    let spec = BilinearSpec::new(Matrix::from_rows(1, 1, vec![-mean_z])?, vec![0.0], vec![mean_x])?;
    let constraints = if critic_ball {
        ConstraintSet::product(vec![
            crate::constraint::Factor { set: ConstraintSet::Unconstrained, dim: 1 },
            crate::constraint::Factor { set: ConstraintSet::ball(vec![0.0], 1.0)?, dim: 1 },
        ])?
    } else {
        ConstraintSet::Unconstrained
    };
    ProblemInstance::assemble(
        FieldSource::Bilinear { spec },
        constraints,
        Some(Point::split(vec![mean_x / mean_z, 0.0], 1)?),
        Some(Constants { mu: 0.0, lipschitz: mean_z.abs(), noise_sigma: 0.0 }),
        format!("linear_wgan(mean_x={mean_x},mean_z={mean_z})"),
        None,
    )
}

/// Finite-sum bilinear game on `[−1, 1]^{2d}` with `n` samples.
///
/// Generation: `M̄` has i.i.d. standard normal entries, `θ*, φ*` are uniform in
/// `[−0.9, 0.9]^d`, `ā = −M̄φ*` and `b̄ = −M̄ᵀθ*`. Each per-sample term is the
/// mean plus `noise_scale` times an i.i.d. standard normal perturbation, the
/// perturbations being centred by subtracting their empirical mean.
pub fn make_stochastic_bilinear(n: usize, d: usize, noise_scale: f64, seed: u64) -> Result<ProblemInstance> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParameter(format!("n and d must be at least 1 (got n={n}, d={d})")));
    }
    if !(noise_scale >= 0.0) || !noise_scale.is_finite() {
        return Err(Error::InvalidParameter(format!("noise_scale must be a finite non-negative number, got {noise_scale}")));
    }

    let mut coupling_rng = rng::stream(seed, Role::Coupling);
    let coupling = Matrix::from_rows(d, d, (0..d * d).map(|_| coupling_rng.sample(StandardNormal)).collect())?;

    let mut eq_rng = rng::stream(seed, Role::Equilibrium);
    let mut uniform = || -> Vec<f64> {
        (0..d).map(|_| eq_rng.random_range(-EQUILIBRIUM_BOUND..=EQUILIBRIUM_BOUND)).collect()
    };
    let theta_star = uniform();
    let phi_star = uniform();

    let a_bar: Vec<f64> = coupling.mul_vec(&phi_star).into_iter().map(|v| -v).collect();
    let b_bar: Vec<f64> = coupling.tr_mul_vec(&theta_star).into_iter().map(|v| -v).collect();

    let mut noise_rng = rng::stream(seed, Role::SampleNoise);
    let mut draw = |len: usize| -> Vec<Vec<f64>> {
        let mut rows: Vec<Vec<f64>> =
            (0..n).map(|_| (0..len).map(|_| noise_rng.sample(StandardNormal)).collect()).collect();
        for j in 0..len {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            rows.iter_mut().for_each(|r| r[j] -= mean);
        }
        rows
    };
    let m_noise = draw(d * d);
    let a_noise = draw(d);
    let b_noise = draw(d);
    let shift = |base: &[f64], noise: &[f64]| -> Vec<f64> {
        base.iter().zip(noise).map(|(x, e)| x + noise_scale * e).collect()
    };
    let per_sample = PerSample {
        couplings: m_noise.iter().map(|e| Matrix { rows: d, cols: d, data: shift(&coupling.data, e) }).collect(),
        a: a_noise.iter().map(|e| shift(&a_bar, e)).collect(),
        b: b_noise.iter().map(|e| shift(&b_bar, e)).collect(),
    };

    let lipschitz = coupling.spectral_norm();
    let spec = BilinearSpec { coupling, a_bar, b_bar, per_sample: Some(per_sample) };
    spec.validate()?;

    let equilibrium = Point::split([theta_star, phi_star].concat(), d)?;
    let noise_sigma = sample_spread(&BilinearField::new(spec.clone())?, equilibrium.as_slice());

    ProblemInstance::assemble(
        FieldSource::Bilinear { spec },
        ConstraintSet::cube(2 * d, -1.0, 1.0)?,
        Some(equilibrium),
        Some(Constants { mu: 0.0, lipschitz, noise_sigma }),
        format!("stochastic_bilinear(n={n},d={d},noise_scale={noise_scale},seed={seed})"),
        Some(seed),
    )
}

/// `sqrt((1/n) Σᵢ ‖F(ω, ξᵢ) − F(ω)‖²)`, the sample spread at `point`.
fn sample_spread(field: &BilinearField, point: &[f64]) -> f64 {
    let Some(n) = field.n_samples() else { return 0.0 };
    let mut mean = vec![0.0; field.dim()];
    field.eval_into(point, &mut mean);
    let mut buf = vec![0.0; field.dim()];
    let total: f64 = (0..n)
        .map(|i| {
            field.sample_eval_into(point, i, &mut buf);
            buf.iter().zip(&mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>()
        })
        .sum();
    (total / n as f64).sqrt()
}

/// Solves `M̄φ* = −ā`, `M̄ᵀθ* = −b̄` for a square, well-conditioned coupling.
pub fn solve_bilinear_equilibrium(spec: &BilinearSpec) -> Result<Point> {
    spec.validate()?;
    let m = &spec.coupling;
    if m.rows != m.cols {
        return Err(Error::DimensionMismatch { expected: m.rows, found: m.cols });
    }
    let condition = m.condition_number();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllPosed { condition });
    }
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<f64>>();
    let phi = solve(m, &neg(&spec.a_bar))?;
    let theta = solve(&m.transpose(), &neg(&spec.b_bar))?;

    let scale = m.data.iter().fold(0.0f64, |s, v| s.max(v.abs())) * (norm(&theta) + norm(&phi))
        + norm(&spec.a_bar)
        + norm(&spec.b_bar);
    let r_phi: Vec<f64> = m.mul_vec(&phi).iter().zip(&spec.a_bar).map(|(x, a)| x + a).collect();
    let r_theta: Vec<f64> = m.tr_mul_vec(&theta).iter().zip(&spec.b_bar).map(|(x, b)| x + b).collect();
    if norm(&r_phi) + norm(&r_theta) > 1e-8 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::IllPosed { condition });
    }
    Point::split([theta, phi].concat(), m.rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{evaluate, evaluate_stochastic};
    use crate::linalg::dist;

    #[test]
    fn rotation_game_operator() {
        let p = make_bilinear_1d();
        assert_eq!(evaluate(p.field(), &[1.0, 1.0]).unwrap(), vec![1.0, -1.0]);
        assert_eq!(evaluate(p.field(), &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(p.field().block_split(), Some(1));
        assert_eq!(p.constants().unwrap().lipschitz, 1.0);
    }

    #[test]
    fn affine_form_matches_the_operator() {
        let p = make_stochastic_bilinear(5, 3, 0.5, 2).unwrap();
        let form = p.field().affine().unwrap();
        let x = [0.3, -1.2, 0.5, 2.0, 0.1, -0.7];
        let mut via_form = form.matrix.mul_vec(&x);
        for (v, c) in via_form.iter_mut().zip(&form.offset) {
            *v += c;
        }
        assert!(dist(&via_form, &evaluate(p.field(), &x).unwrap()) <= 1e-12);
    }

    #[test]
    fn linear_wgan_reduces_to_rotation_game() {
        // E[x] = 0, E[z] = −1 gives L = θ·φ exactly.
        let wgan = make_linear_wgan(0.0, -1.0, false).unwrap();
        let rot = make_bilinear_1d();
        for p in [[1.0, 1.0], [-0.3, 2.5], [4.0, -1.5]] {
            assert_eq!(evaluate(wgan.field(), &p).unwrap(), evaluate(rot.field(), &p).unwrap());
        }
        // Generator matches the data mean at the solution.
        let w = make_linear_wgan(3.0, 2.0, true).unwrap();
        assert_eq!(w.equilibrium().unwrap().as_slice(), &[1.5, 0.0]);
        assert!(w.equilibrium_residual().unwrap() <= 1e-12);
        // F matches the gradients of φ·E[x] − φ·θ·E[z].
        let (theta, phi) = (0.7, -0.4);
        let f = evaluate(w.field(), &[theta, phi]).unwrap();
        assert_eq!(f, vec![-phi * 2.0, -(3.0 - theta * 2.0)]);
    }

    #[test]
    fn stochastic_instance_satisfies_optimality_conditions() {
        let p = make_stochastic_bilinear(100, 20, 0.5, 7).unwrap();
        let spec = p.field().bilinear().unwrap();
        let eq = p.equilibrium().unwrap();
        let (theta, phi) = eq.blocks().unwrap();
        let r1 = norm(&spec.coupling.mul_vec(phi).iter().zip(&spec.a_bar).map(|(x, a)| x + a).collect::<Vec<_>>());
        let r2 = norm(&spec.coupling.tr_mul_vec(theta).iter().zip(&spec.b_bar).map(|(x, b)| x + b).collect::<Vec<_>>());
        assert!(r1 <= 1e-10 && r2 <= 1e-10, "{r1} {r2}");
        assert!(eq.as_slice().iter().all(|v| v.abs() <= EQUILIBRIUM_BOUND));
        assert!(spec.centering_error() <= 1e-12);
        assert!(p.constants().unwrap().noise_sigma > 0.0);
    }

    #[test]
    fn generation_is_deterministic_in_seed() {
        let a = make_stochastic_bilinear(100, 20, 0.5, 7).unwrap();
        let b = make_stochastic_bilinear(100, 20, 0.5, 7).unwrap();
        let c = make_stochastic_bilinear(100, 20, 0.5, 8).unwrap();
        assert_eq!(a.field().bilinear().unwrap().per_sample, b.field().bilinear().unwrap().per_sample);
        assert_ne!(a.field().bilinear().unwrap().coupling, c.field().bilinear().unwrap().coupling);
    }

    #[test]
    fn zero_noise_samples_equal_mean_bitwise() {
        let p = make_stochastic_bilinear(5, 3, 0.0, 11).unwrap();
        let x: Vec<f64> = (0..6).map(|i| 0.1 * i as f64 - 0.2).collect();
        let mean = evaluate(p.field(), &x).unwrap();
        for i in 0..5 {
            assert_eq!(evaluate_stochastic(p.field(), &x, i).unwrap(), mean);
        }
        let single = make_stochastic_bilinear(1, 3, 0.7, 11).unwrap();
        assert_eq!(evaluate_stochastic(single.field(), &x, 0).unwrap(), evaluate(single.field(), &x).unwrap());
    }

    #[test]
    fn finite_sum_is_unbiased() {
        let p = make_stochastic_bilinear(30, 4, 1.3, 3).unwrap();
        let x: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let mean = evaluate(p.field(), &x).unwrap();
        let mut acc = vec![0.0; 8];
        for i in 0..30 {
            for (a, v) in acc.iter_mut().zip(evaluate_stochastic(p.field(), &x, i).unwrap()) {
                *a += v / 30.0;
            }
        }
        assert!(dist(&acc, &mean) <= 1e-10 * norm(&mean));
    }

    #[test]
    fn per_sample_evaluations_vary_at_equilibrium() {
        let p = make_stochastic_bilinear(100, 20, 0.5, 7).unwrap();
        let eq = p.equilibrium().unwrap().as_slice().to_vec();
        let samples: Vec<Vec<f64>> = (0..100).map(|i| evaluate_stochastic(p.field(), &eq, i).unwrap()).collect();
        let var: f64 = samples.iter().map(|s| s.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / 100.0;
        assert!(var > 0.0);
    }

    #[test]
    fn invalid_generator_arguments() {
        assert!(make_stochastic_bilinear(10, 2, -0.1, 0).is_err());
        assert!(make_stochastic_bilinear(0, 2, 0.1, 0).is_err());
        assert!(make_stochastic_bilinear(10, 0, 0.1, 0).is_err());
    }

    #[test]
    fn equilibrium_solve() {
        let spec = BilinearSpec::new(Matrix::identity(2), vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let eq = solve_bilinear_equilibrium(&spec).unwrap();
        assert_eq!(eq.as_slice(), &[0.0, -1.0, -1.0, 0.0]);

        let p = make_stochastic_bilinear(50, 10, 0.3, 19).unwrap();
        let solved = solve_bilinear_equilibrium(p.field().bilinear().unwrap()).unwrap();
        assert!(dist(solved.as_slice(), p.equilibrium().unwrap().as_slice()) <= 1e-8);

        let singular = BilinearSpec::new(Matrix::zeros(2, 2), vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(solve_bilinear_equilibrium(&singular), Err(Error::IllPosed { .. })));
    }
}
