//! Single deterministic update rules.

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::field::{evaluate, VectorField};
use crate::linalg::{solve, Matrix};

fn check_eta(eta: f64) -> Result<()> {
    if eta >= 0.0 && eta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("step size must be non-negative and finite, got {eta}")))
    }
}

fn check_set(set: &ConstraintSet, dim: usize) -> Result<()> {
    set.check_dim(dim)
}

/// `P_Ω[ω − η·g]`.
pub(crate) fn projected_step(set: &ConstraintSet, omega: &[f64], eta: f64, g: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = omega.iter().zip(g).map(|(w, gi)| w - eta * gi).collect();
    set.project_in_place(&mut out);
    out
}

/// `ω⁺ = P_Ω[ω − ηF(ω)]`.
pub fn step_simultaneous(field: &dyn VectorField, set: &ConstraintSet, omega: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_eta(eta)?;
    check_set(set, field.dim())?;
    let g = evaluate(field, omega)?;
    Ok(projected_step(set, omega, eta, &g))
}

/// The feasible sets of the two players, when `set` splits at `split`.
pub(crate) fn block_sets(set: &ConstraintSet, split: usize, dim: usize) -> Result<(ConstraintSet, ConstraintSet)> {
    match (set.restrict(0..split), set.restrict(split..dim)) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::InvalidConstraint(format!("set does not factor at coordinate {split}"))),
    }
}

/// Player one moves with `F` at `ω`, then player two moves with `F` at the
/// point holding the new `θ` and the old `φ`. Each block is projected onto
/// its own factor of `Ω`.
pub fn step_alternated(field: &dyn VectorField, set: &ConstraintSet, omega: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_eta(eta)?;
    check_set(set, field.dim())?;
    let split = field.block_split().ok_or(Error::MissingBlockSplit)?;
    let (set_theta, set_phi) = block_sets(set, split, field.dim())?;
    let g = evaluate(field, omega)?;
    let mut next = omega.to_vec();
    let theta = projected_step(&set_theta, &omega[..split], eta, &g[..split]);
    next[..split].copy_from_slice(&theta);
    let g = evaluate(field, &next)?;
    let phi = projected_step(&set_phi, &omega[split..], eta, &g[split..]);
    next[split..].copy_from_slice(&phi);
    Ok(next)
}

/// Returns `(ω_half, ω⁺)` with `ω_half = P_Ω[ω − ηF(ω)]` and
/// `ω⁺ = P_Ω[ω − ηF(ω_half)]`.
pub fn step_extragradient(
    field: &dyn VectorField,
    set: &ConstraintSet,
    omega: &[f64],
    eta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_eta(eta)?;
    check_set(set, field.dim())?;
    let half = projected_step(set, omega, eta, &evaluate(field, omega)?);
    let next = projected_step(set, omega, eta, &evaluate(field, &half)?);
    Ok((half, next))
}

/// Extrapolation from the past: `ω_half = P_Ω[ω − η·stored]`,
/// `ω⁺ = P_Ω[ω − ηF(ω_half)]`; returns `(ω_half, ω⁺, F(ω_half))`, the last
/// being the gradient to store for the next call. One evaluation per call.
pub fn step_extrapolation_from_past(
    field: &dyn VectorField,
    set: &ConstraintSet,
    omega: &[f64],
    stored_grad: &[f64],
    eta: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    check_eta(eta)?;
    check_set(set, field.dim())?;
    if stored_grad.len() != omega.len() {
        return Err(Error::DimensionMismatch { expected: omega.len(), found: stored_grad.len() });
    }
    let half = projected_step(set, omega, eta, stored_grad);
    let g = evaluate(field, &half)?;
    let next = projected_step(set, omega, eta, &g);
    Ok((half, next, g))
}

/// Backward Euler step `ω⁺ = ω − ηF(ω⁺)` for an affine `F(ω) = Aω + c`:
/// `ω⁺ = (I + ηA)⁻¹(ω − ηc)`.
pub fn step_implicit(field: &dyn VectorField, omega: &[f64], eta: f64) -> Result<Vec<f64>> {
    check_eta(eta)?;
    let form = field.affine().ok_or(Error::NonAffine)?;
    let n = form.matrix.rows;
    if omega.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: omega.len() });
    }
    let mut system = Matrix::identity(n);
    for (s, a) in system.data.iter_mut().zip(&form.matrix.data) {
        *s += eta * a;
    }
    let rhs: Vec<f64> = omega.iter().zip(&form.offset).map(|(w, c)| w - eta * c).collect();
    solve(&system, &rhs)
}

/// Nesterov-style extrapolation `ω_half = ω − ηF(ω)`,
/// `ω⁺ = ω_half + β(ω_half − ω_prev_half)`, where `ω_prev_half` is the
/// previous call's `ω_half` (pass `ω₀` on the first call). Unconstrained only.
pub fn step_nesterov(
    field: &dyn VectorField,
    set: &ConstraintSet,
    omega: &[f64],
    omega_prev_half: &[f64],
    eta: f64,
    beta: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_eta(eta)?;
    if !set.is_unconstrained() {
        return Err(Error::RequiresUnconstrained { rule: "nesterov" });
    }
    if omega_prev_half.len() != omega.len() {
        return Err(Error::DimensionMismatch { expected: omega.len(), found: omega_prev_half.len() });
    }
    let half = projected_step(set, omega, eta, &evaluate(field, omega)?);
    let next = half.iter().zip(omega_prev_half).map(|(h, p)| h + beta * (h - p)).collect();
    Ok((half, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::AffineField;

    fn rotation() -> AffineField {
        AffineField::new(Matrix::from_rows(2, 2, vec![0.0, 1.0, -1.0, 0.0]).unwrap(), vec![0.0; 2], Some(1)).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-14)
    }

    const FREE: ConstraintSet = ConstraintSet::Unconstrained;

    #[test]
    fn simultaneous_and_alternated() {
        assert!(close(&step_simultaneous(&rotation(), &FREE, &[1.0, 1.0], 0.1).unwrap(), &[0.9, 1.1]));
        assert!(close(&step_alternated(&rotation(), &FREE, &[1.0, 1.0], 0.1).unwrap(), &[0.9, 1.09]));
        assert_eq!(step_alternated(&rotation(), &FREE, &[0.0, 0.0], 0.1).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn alternated_needs_blocks() {
        let f = AffineField::new(Matrix::identity(2), vec![0.0; 2], None).unwrap();
        assert_eq!(step_alternated(&f, &FREE, &[1.0, 1.0], 0.1), Err(Error::MissingBlockSplit));
    }

    #[test]
    fn extragradient_traces() {
        let (h, n) = step_extragradient(&rotation(), &FREE, &[1.0, 1.0], 0.1).unwrap();
        assert!(close(&h, &[0.9, 1.1]) && close(&n, &[0.89, 1.09]));

        let (h, n, g) = step_extrapolation_from_past(&rotation(), &FREE, &[1.0, 1.0], &[0.0, 0.0], 0.1).unwrap();
        assert_eq!(h, vec![1.0, 1.0]);
        assert!(close(&n, &[0.9, 1.1]));
        assert_eq!(g, vec![1.0, -1.0]);
        let (h, n, _) = step_extrapolation_from_past(&rotation(), &FREE, &n, &g, 0.1).unwrap();
        assert!(close(&h, &[0.8, 1.2]) && close(&n, &[0.78, 1.18]));
    }

    #[test]
    fn implicit_step() {
        let n = step_implicit(&rotation(), &[1.0, 1.0], 0.1).unwrap();
        assert!(close(&n, &[0.9 / 1.01, 1.1 / 1.01]));
        assert_eq!(step_implicit(&rotation(), &[0.3, -0.7], 0.0).unwrap(), vec![0.3, -0.7]);
        let f = crate::field::FnField::new(2, |x, out| out.copy_from_slice(x));
        assert_eq!(step_implicit(&f, &[1.0, 1.0], 0.1), Err(Error::NonAffine));
    }

    #[test]
    fn nesterov_step() {
        let (h, n) = step_nesterov(&rotation(), &FREE, &[1.0, 1.0], &[1.0, 1.0], 0.1, 0.9).unwrap();
        assert!(close(&h, &[0.9, 1.1]) && close(&n, &[0.81, 1.19]));
        let (_, n0) = step_nesterov(&rotation(), &FREE, &[1.0, 1.0], &[1.0, 1.0], 0.1, 0.0).unwrap();
        assert_eq!(n0, step_simultaneous(&rotation(), &FREE, &[1.0, 1.0], 0.1).unwrap());
        let boxed = ConstraintSet::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(step_nesterov(&rotation(), &boxed, &[1.0, 1.0], &[1.0, 1.0], 0.1, 0.9), Err(Error::RequiresUnconstrained { rule: "nesterov" }));
    }

    #[test]
    fn projection_is_applied() {
        let boxed = ConstraintSet::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(step_simultaneous(&rotation(), &boxed, &[1.0, 1.0], 0.1).unwrap(), vec![0.9, 1.0]);
    }
}
