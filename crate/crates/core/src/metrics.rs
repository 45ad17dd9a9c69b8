//! Convergence measures: distance to a known solution, the restricted
//! saddle-point merit of box-constrained bilinear games, log-linear rate
//! fitting and finite-difference operator checks.

use serde::{Deserialize, Serialize};

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::field::{evaluate, VectorField};
use crate::linalg::{dist, dot, norm, sub};
use crate::problems::{BilinearSpec, ProblemInstance};

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-6;

/// Which scalar a run tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeritSpec {
    DistanceToSolution,
    /// Distance to the problem's reference point, for games without a
    /// claimed solution.
    DistanceToReferencePoint,
    /// Restricted saddle merit over `Box ∩ {‖ω − ω₀‖ ≤ radius}`; `radius: None`
    /// means the whole box. `ω₀` is the run's starting point.
    BilinearSaddleMerit {
        #[serde(default)]
        radius: Option<f64>,
    },
}

impl MeritSpec {
    /// Checks that the measure is defined for `problem`.
    pub fn check(&self, problem: &ProblemInstance) -> Result<()> {
        match self {
            MeritSpec::DistanceToSolution => {
                problem.equilibrium().ok_or(Error::MissingEquilibrium)?;
            }
            MeritSpec::DistanceToReferencePoint => {
                problem.reference_point().ok_or(Error::MissingEquilibrium)?;
            }
            MeritSpec::BilinearSaddleMerit { radius } => {
                problem.field().bilinear().ok_or(Error::NotBilinear)?;
                if !matches!(problem.constraints(), ConstraintSet::Box { .. }) {
                    return Err(Error::InvalidParameter("saddle merit needs a box-constrained problem".into()));
                }
                if let Some(r) = radius {
                    if !(*r > 0.0) {
                        return Err(Error::InvalidParameter(format!("merit radius must be positive, got {r}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// The measure at `point`, with `reference` the run's starting point.
    pub fn evaluate(&self, problem: &ProblemInstance, point: &[f64], reference: &[f64]) -> Result<f64> {
        match self {
            MeritSpec::DistanceToSolution => distance_to_solution(problem, point),
            MeritSpec::DistanceToReferencePoint => {
                let r = problem.reference_point().ok_or(Error::MissingEquilibrium)?;
                if point.len() != r.dim() {
                    return Err(Error::DimensionMismatch { expected: r.dim(), found: point.len() });
                }
                Ok(dist(point, r.as_slice()))
            }
            MeritSpec::BilinearSaddleMerit { radius } => {
                let spec = problem.field().bilinear().ok_or(Error::NotBilinear)?;
                bilinear_saddle_merit(spec, problem.constraints(), point, *radius, reference)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MeritSpec::DistanceToSolution | MeritSpec::DistanceToReferencePoint => "distance",
            MeritSpec::BilinearSaddleMerit { .. } => "merit",
        }
    }
}

/// `‖ω − ω*‖`.
pub fn distance_to_solution(problem: &ProblemInstance, point: &[f64]) -> Result<f64> {
    let eq = problem.equilibrium().ok_or(Error::MissingEquilibrium)?;
    if point.len() != eq.dim() {
        return Err(Error::DimensionMismatch { expected: eq.dim(), found: point.len() });
    }
    Ok(dist(point, eq.as_slice()))
}

/// `max_φ L(θ_t, φ) − min_θ L(θ, φ_t)` with `(θ, φ)` ranging jointly over
/// `Box ∩ {‖ω − ω₀‖ ≤ R}`, for `L(θ, φ) = θᵀM̄φ + θᵀā + φᵀb̄`.
///
/// Both inner problems are linear, so the merit is
/// `max_ω cᵀω + θ_tᵀā − φ_tᵀb̄` with `c = (−(M̄φ_t + ā), M̄ᵀθ_t + b̄)`. Over a box
/// the maximiser is a vertex chosen coordinate by coordinate. With a finite
/// radius the maximiser is `clip(ω₀ + τc)`, with `τ` found by bisection so that
/// it lies on the sphere; this is exact because the Lagrangian separates over
/// coordinates once the ball multiplier is fixed. `ω₀` is projected onto the
/// box first.
pub fn bilinear_saddle_merit(
    spec: &BilinearSpec,
    constraints: &ConstraintSet,
    point: &[f64],
    radius: Option<f64>,
    reference: &[f64],
) -> Result<f64> {
    let ConstraintSet::Box { lower, upper } = constraints else {
        return Err(Error::InvalidParameter("saddle merit needs a box-constrained problem".into()));
    };
    let d = spec.theta_dim();
    let dim = d + spec.phi_dim();
    for len in [point.len(), reference.len(), lower.len()] {
        if len != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: len });
        }
    }
    let (theta, phi) = point.split_at(d);
    let c_theta: Vec<f64> = spec.coupling.mul_vec(phi).iter().zip(&spec.a_bar).map(|(x, a)| x + a).collect();
    let c_phi: Vec<f64> = spec.coupling.tr_mul_vec(theta).iter().zip(&spec.b_bar).map(|(x, b)| x + b).collect();
    let c: Vec<f64> = c_theta.iter().map(|v| -v).chain(c_phi.iter().copied()).collect();
    let constant = dot(theta, &spec.a_bar) - dot(phi, &spec.b_bar);

    let vertex: Vec<f64> = (0..dim)
        .map(|i| if c[i] > 0.0 { upper[i] } else if c[i] < 0.0 { lower[i] } else { reference[i].clamp(lower[i], upper[i]) })
        .collect();

    let maximiser = match radius {
        None => vertex,
        Some(r) if !(r > 0.0) => {
            return Err(Error::InvalidParameter(format!("merit radius must be positive, got {r}")));
        }
        Some(r) => {
            let x0: Vec<f64> = (0..dim).map(|i| reference[i].clamp(lower[i], upper[i])).collect();
            if dist(&vertex, &x0) <= r {
                vertex
            } else {
                let at = |tau: f64| -> Vec<f64> {
                    (0..dim).map(|i| (x0[i] + tau * c[i]).clamp(lower[i], upper[i])).collect()
                };
                let mut hi = r / norm(&c).max(f64::MIN_POSITIVE);
                while dist(&at(hi), &x0) < r {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if dist(&at(mid), &x0) < r {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                at(lo)
            }
        }
    };
    Ok(dot(&c, &maximiser) + constant)
}

/// Result of a log-linear fit `log v ≈ α + t·log(factor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub per_step_factor: f64,
    pub r_squared: f64,
    pub window: (usize, usize),
}

/// Least-squares fit of `log(value)` against `iter` for the points whose
/// iteration lies in `window` (inclusive), or all points when `window` is `None`.
pub fn fit_geometric_rate(series: &[(usize, f64)], window: Option<(usize, usize)>) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| window.is_none_or(|(a, b)| (a..=b).contains(t)))
        .map(|&(t, v)| {
            if v > 0.0 && v.is_finite() {
                Ok((t as f64, v.ln()))
            } else {
                Err(Error::InvalidParameter(format!("rate fit needs positive finite values, got {v} at iter {t}")))
            }
        })
        .collect::<Result<_>>()?;
    if pts.len() < 3 {
        return Err(Error::InvalidParameter(format!("rate fit needs at least 3 points, got {}", pts.len())));
    }
    // Fit against offsets from the first value so a constant series is exactly flat.
    let y0 = pts[0].1;
    let pts: Vec<(f64, f64)> = pts.into_iter().map(|(t, y)| (t, y - y0)).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("rate fit needs distinct iterations".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    let first = pts.first().map(|p| p.0 as usize).unwrap_or_default();
    let last = pts.last().map(|p| p.0 as usize).unwrap_or_default();
    Ok(RateFit { per_step_factor: slope.exp(), r_squared, window: (first, last) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    pub worst_point: Vec<f64>,
    pub points_checked: usize,
}

/// Compares `F` with central differences of the payoffs: the first block of
/// `F` against `∂L^(θ)/∂θ`, the second against `∂L^(φ)/∂φ`. The relative
/// error at a point is `‖F − F_fd‖ / max(‖F‖, ‖F_fd‖)`.
pub fn check_gradient_fd(field: &dyn VectorField, points: &[Vec<f64>], h: f64) -> Result<FdReport> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {h}")));
    }
    let payoffs = field.payoffs().ok_or(Error::MissingPayoffs)?;
    let split = field.block_split().ok_or(Error::MissingBlockSplit)?;
    if points.is_empty() {
        return Err(Error::InvalidParameter("no points supplied".into()));
    }
    let mut report = FdReport { max_rel_error: 0.0, worst_point: points[0].clone(), points_checked: 0 };
    for p in points {
        let f = evaluate(field, p)?;
        let mut fd = vec![0.0; p.len()];
        let mut probe = p.clone();
        for (i, slot) in fd.iter_mut().enumerate() {
            let cost = |x: &[f64]| {
                let (a, b) = payoffs.costs(x);
                if i < split { a } else { b }
            };
            probe[i] = p[i] + h;
            let up = cost(&probe);
            probe[i] = p[i] - h;
            let down = cost(&probe);
            probe[i] = p[i];
            *slot = (up - down) / (2.0 * h);
        }
        let scale = norm(&f).max(norm(&fd)).max(f64::MIN_POSITIVE);
        let err = norm(&sub(&f, &fd)) / scale;
        report.points_checked += 1;
        if err > report.max_rel_error || err.is_nan() {
            report.max_rel_error = err;
            report.worst_point = p.clone();
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problems::{make_bilinear_1d, make_stochastic_bilinear, make_toy_gan};

    fn unit_square_game() -> (BilinearSpec, ConstraintSet) {
        (BilinearSpec::new(Matrix::identity(1), vec![0.0], vec![0.0]).unwrap(), ConstraintSet::cube(2, -1.0, 1.0).unwrap())
    }

    #[test]
    fn distance() {
        let p = make_bilinear_1d();
        assert_eq!(distance_to_solution(&p, &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(distance_to_solution(&p, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(distance_to_solution(&make_toy_gan(-2.0), &[0.0, 0.0]), Err(Error::MissingEquilibrium));
        let s = make_stochastic_bilinear(20, 5, 0.3, 2).unwrap();
        assert!(distance_to_solution(&s, s.equilibrium().unwrap().as_slice()).unwrap() <= 1e-10);
    }

    #[test]
    fn merit_of_rotation_game_on_unit_square() {
        let (spec, b) = unit_square_game();
        assert_eq!(bilinear_saddle_merit(&spec, &b, &[0.5, -0.5], None, &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(bilinear_saddle_merit(&spec, &b, &[0.0, 0.0], None, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn merit_grows_along_rays() {
        let (spec, b) = unit_square_game();
        let mut prev = 0.0;
        for k in 1..=10 {
            let s = k as f64 / 10.0;
            let m = bilinear_saddle_merit(&spec, &b, &[0.7 * s, 0.4 * s], None, &[0.0, 0.0]).unwrap();
            assert!(m >= prev);
            prev = m;
        }
    }

    #[test]
    fn restricted_merit_matches_brute_force() {
        let (spec, b) = unit_square_game();
        let point = [0.5, -0.3];
        let reference = [0.2, 0.1];
        let r = 0.5;
        let merit = bilinear_saddle_merit(&spec, &b, &point, Some(r), &reference).unwrap();
        // Grid search over the feasible region.
        let c = [-(point[1]), point[0]];
        let mut best = f64::NEG_INFINITY;
        let n = 2000;
        for i in 0..=n {
            for j in 0..=n {
                let x = -1.0 + 2.0 * i as f64 / n as f64;
                let y = -1.0 + 2.0 * j as f64 / n as f64;
                if (x - reference[0]).hypot(y - reference[1]) <= r {
                    best = best.max(c[0] * x + c[1] * y);
                }
            }
        }
        assert!(merit >= best - 1e-12 && merit <= best + 1e-3, "{merit} vs {best}");
        // A large radius recovers the box merit.
        let big = bilinear_saddle_merit(&spec, &b, &point, Some(10.0), &reference).unwrap();
        assert_eq!(big, bilinear_saddle_merit(&spec, &b, &point, None, &reference).unwrap());
    }

    #[test]
    fn merit_vanishes_at_generated_equilibrium() {
        let s = make_stochastic_bilinear(10, 6, 0.5, 4).unwrap();
        let eq = s.equilibrium().unwrap().as_slice().to_vec();
        let spec = s.field().bilinear().unwrap();
        let m = bilinear_saddle_merit(spec, s.constraints(), &eq, None, &[0.0; 12]).unwrap();
        assert!(m.abs() <= 1e-10, "{m}");
        assert!(MeritSpec::BilinearSaddleMerit { radius: None }.check(&s).is_ok());
        assert!(MeritSpec::BilinearSaddleMerit { radius: None }.check(&make_bilinear_1d()).is_err());
        assert!(MeritSpec::BilinearSaddleMerit { radius: None }.check(&make_toy_gan(1.0)).is_err());
    }

    #[test]
    fn geometric_fits() {
        let series: Vec<(usize, f64)> = (0..50).map(|t| (t, 2.0 * 0.99f64.powi(t as i32))).collect();
        let fit = fit_geometric_rate(&series, None).unwrap();
        assert!((fit.per_step_factor - 0.99).abs() < 1e-9);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);

        let flat: Vec<(usize, f64)> = (0..10).map(|t| (t, 3.0)).collect();
        let fit = fit_geometric_rate(&flat, None).unwrap();
        assert_eq!(fit.per_step_factor, 1.0);
        assert_eq!(fit.r_squared, 1.0);

        let windowed = fit_geometric_rate(&series, Some((10, 20))).unwrap();
        assert_eq!(windowed.window, (10, 20));

        assert!(fit_geometric_rate(&[(0, 1.0), (1, 0.0), (2, 1.0)], None).is_err());
        assert!(fit_geometric_rate(&[(0, 1.0), (1, 1.0)], None).is_err());
    }

    #[test]
    fn finite_differences() {
        let gan = make_toy_gan(-2.0);
        let pts: Vec<Vec<f64>> = crate::probe::random_pairs(2, -3.0, 3.0, 50, 5).into_iter().flat_map(|(a, b)| [a, b]).collect();
        assert!(check_gradient_fd(gan.field(), &pts, FD_STEP).unwrap().max_rel_error <= 1e-5);

        let bil = make_bilinear_1d();
        assert!(check_gradient_fd(bil.field(), &pts, FD_STEP).unwrap().max_rel_error <= 1e-9);

        assert!(check_gradient_fd(bil.field(), &pts, 0.0).is_err());
        let no_payoffs = crate::problems::make_strongly_monotone(0.1, 1.0, crate::Point::zeros(2)).unwrap();
        assert_eq!(check_gradient_fd(no_payoffs.field(), &pts, FD_STEP), Err(Error::MissingPayoffs));
    }
}
