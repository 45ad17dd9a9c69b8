//! The two-dimensional strongly monotone affine game `F(ω) = A(ω − ω*)`.

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::field::AffineForm;
use crate::linalg::Matrix;
use crate::point::Point;

use super::{Constants, FieldSource, ProblemInstance};

/// `F(ω) = A(ω − ω*)` with `A = [[μ, γ], [−γ, μ]]`: `μ`-strongly monotone and
/// `√(μ² + γ²)`-Lipschitz, unconstrained.
pub fn make_strongly_monotone(mu: f64, gamma: f64, equilibrium: Point) -> Result<ProblemInstance> {
    build(mu, gamma, equilibrium, ConstraintSet::Unconstrained)
}

/// [`make_strongly_monotone`] restricted to the square `[lower, upper]²`, which
/// must contain `ω*`.
pub fn make_strongly_monotone_boxed(
    mu: f64,
    gamma: f64,
    equilibrium: Point,
    lower: f64,
    upper: f64,
) -> Result<ProblemInstance> {
    build(mu, gamma, equilibrium, ConstraintSet::cube(2, lower, upper)?)
}

fn build(mu: f64, gamma: f64, equilibrium: Point, constraints: ConstraintSet) -> Result<ProblemInstance> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be non-negative, got {gamma}")));
    }
    if equilibrium.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: equilibrium.dim() });
    }
    let matrix = Matrix::from_rows(2, 2, vec![mu, gamma, -gamma, mu])?;
    // c = −Aω*, computed with the same row products the evaluation uses, so
    // that F(ω*) is exactly zero.
    let offset = matrix.mul_vec(equilibrium.as_slice()).into_iter().map(|v| -v).collect();
    let label = format!("strongly_monotone(mu={mu},gamma={gamma})");
    ProblemInstance::assemble(
        FieldSource::Affine { form: AffineForm { matrix, offset }, block_split: Some(1) },
        constraints,
        Some(equilibrium),
        Some(Constants { mu, lipschitz: mu.hypot(gamma), noise_sigma: 0.0 }),
        label,
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::evaluate;
    use crate::probe::{check_monotone, random_pairs};

    #[test]
    fn constants_and_operator() {
        let p = make_strongly_monotone(0.1, 1.0, Point::zeros(2)).unwrap();
        assert!((p.constants().unwrap().lipschitz - 1.004_987_562_112_089).abs() < 1e-12);
        assert_eq!(evaluate(p.field(), &[1.0, 0.0]).unwrap(), vec![0.1, -1.0]);
        assert!(p.field().affine().is_some());
    }

    #[test]
    fn operator_vanishes_at_solution() {
        let eq = Point::new(vec![0.37, -1.21]).unwrap();
        let p = make_strongly_monotone(0.3, 2.0, eq.clone()).unwrap();
        assert_eq!(evaluate(p.field(), eq.as_slice()).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn symmetric_case_is_a_gradient_field() {
        let p = make_strongly_monotone(0.5, 0.0, Point::zeros(2)).unwrap();
        let r = check_monotone(p.field(), &random_pairs(2, -2.0, 2.0, 100, 9)).unwrap();
        assert!((r.strong_monotonicity_lb - 0.5).abs() < 1e-12);
    }

    #[test]
    fn invalid_arguments() {
        assert!(make_strongly_monotone(0.0, 1.0, Point::zeros(2)).is_err());
        assert!(make_strongly_monotone(-1.0, 1.0, Point::zeros(2)).is_err());
        assert!(make_strongly_monotone(0.1, 1.0, Point::zeros(3)).is_err());
        assert!(make_strongly_monotone_boxed(0.1, 1.0, Point::new(vec![3.0, 0.0]).unwrap(), -2.0, 2.0).is_err());
    }
}
