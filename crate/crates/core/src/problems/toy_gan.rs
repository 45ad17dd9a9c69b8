//! A two-dimensional non-convex GAN:
//! `min_θ max_φ −log(1 + e^{−φ·ω*}) − log(1 + e^{φ·θ})`.
//!
//! The generator `θ` tries to match a point mass at `ω*`; the discriminator is
//! a logistic regression with weight `φ`.

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::field::{Payoffs, VectorField};
use crate::point::Point;

use super::{FieldSource, ProblemInstance};

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + eˣ)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyGan {
    omega_star: f64,
}

impl ToyGan {
    pub fn new(omega_star: f64) -> Result<Self> {
        if !omega_star.is_finite() {
            return Err(Error::InvalidParameter(format!("omega_star must be finite, got {omega_star}")));
        }
        Ok(ToyGan { omega_star })
    }

    pub fn omega_star(&self) -> f64 {
        self.omega_star
    }

    pub fn objective(&self, theta: f64, phi: f64) -> f64 {
        -softplus(-phi * self.omega_star) - softplus(phi * theta)
    }
}

impl VectorField for ToyGan {
    fn dim(&self) -> usize {
        2
    }

    fn block_split(&self) -> Option<usize> {
        Some(1)
    }

    /// `(∇_θ L, −∇_φ L)`: the generator descends `L`, the discriminator ascends it.
    fn eval_into(&self, point: &[f64], out: &mut [f64]) {
        let (theta, phi) = (point[0], point[1]);
        let s = sigmoid(phi * theta);
        out[0] = -phi * s;
        out[1] = -(self.omega_star * sigmoid(-phi * self.omega_star) - theta * s);
    }

    fn payoffs(&self) -> Option<&dyn Payoffs> {
        Some(self)
    }
}

impl Payoffs for ToyGan {
    fn costs(&self, point: &[f64]) -> (f64, f64) {
        let l = self.objective(point[0], point[1]);
        (l, -l)
    }
}

/// The toy GAN on `ℝ²`. No solution is claimed for this non-convex game; the
/// stationary point `(ω*, 0)` is recorded as the reference point.
pub fn make_toy_gan(omega_star: f64) -> ProblemInstance {
    let label = format!("toy_gan(omega_star={omega_star})");
    ProblemInstance::assemble(
        FieldSource::ToyGan { omega_star },
        ConstraintSet::Unconstrained,
        None,
        None,
        label,
        None,
    )
    .and_then(|p| p.with_reference_point(Point::new(vec![omega_star, 0.0])?))
    .expect("omega_star must be finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::evaluate;
    use crate::probe::{check_monotone, random_pairs};

    #[test]
    fn operator_at_origin() {
        let p = make_toy_gan(-2.0);
        assert_eq!(evaluate(p.field(), &[0.0, 0.0]).unwrap(), vec![0.0, 1.0]);
        let (l, m) = p.field().payoffs().unwrap().costs(&[0.0, 0.0]);
        assert!((l + 2.0 * std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(m, -l);
    }

    #[test]
    fn reference_point_is_stationary() {
        let p = make_toy_gan(-2.0);
        let r = p.reference_point().unwrap();
        assert_eq!(evaluate(p.field(), r.as_slice()).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn operator_is_not_monotone() {
        let p = make_toy_gan(-2.0);
        let r = check_monotone(p.field(), &random_pairs(2, -3.0, 3.0, 2000, 21)).unwrap();
        assert!(!r.monotone);
        let (a, b) = r.witness.unwrap();
        let fa = evaluate(p.field(), &a).unwrap();
        let fb = evaluate(p.field(), &b).unwrap();
        let inner: f64 = (0..2).map(|i| (fa[i] - fb[i]) * (a[i] - b[i])).sum();
        assert!(inner < -1e-12);
    }

    #[test]
    fn large_arguments_stay_finite() {
        let p = make_toy_gan(-2.0);
        assert!(evaluate(p.field(), &[800.0, 800.0]).is_ok());
        assert!(p.field().payoffs().unwrap().costs(&[800.0, -800.0]).0.is_finite());
    }
}
