//! The game operator `F` and its stochastic estimates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problems::BilinearSpec;

/// Cost functions `(L^(θ), L^(φ))` of the two players. The associated operator
/// is `F = [∇_θ L^(θ), ∇_φ L^(φ)]`.
pub trait Payoffs: Send + Sync {
    fn costs(&self, point: &[f64]) -> (f64, f64);
}

/// `F(ω) = A·ω + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub matrix: Matrix,
    pub offset: Vec<f64>,
}

/// A vector field `F: ℝᵈ → ℝᵈ`, optionally a finite sum
/// `F(ω) = (1/n) Σᵢ F(ω, ξᵢ)`.
///
/// Implementations write into caller-provided buffers and may assume the
/// buffers and points have length [`VectorField::dim`]; the checked entry
/// points are [`evaluate`] and [`evaluate_stochastic`].
pub trait VectorField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Index where player one's coordinates end.
    fn block_split(&self) -> Option<usize> {
        None
    }

    fn eval_into(&self, point: &[f64], out: &mut [f64]);

    /// Number of terms when the field is a finite sum.
    fn n_samples(&self) -> Option<usize> {
        None
    }

    /// The `sample`-th term of the finite sum. Only called with
    /// `sample < n_samples()`.
    fn sample_eval_into(&self, point: &[f64], sample: usize, out: &mut [f64]) {
        let _ = sample;
        self.eval_into(point, out)
    }

    fn payoffs(&self) -> Option<&dyn Payoffs> {
        None
    }

    /// The affine representation, for fields that have one.
    fn affine(&self) -> Option<AffineForm> {
        None
    }

    /// The bilinear game data, for finite-sum bilinear fields.
    fn bilinear(&self) -> Option<&BilinearSpec> {
        None
    }
}

fn check_point(field: &dyn VectorField, point: &[f64]) -> Result<()> {
    if point.len() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: point.len() });
    }
    if point.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinitePoint(point.to_vec()));
    }
    Ok(())
}

fn check_output(point: &[f64], out: Vec<f64>) -> Result<Vec<f64>> {
    if out.iter().all(|v| v.is_finite()) {
        Ok(out)
    } else {
        Err(Error::NonFiniteOutput { point: point.to_vec() })
    }
}

/// `F(point)`, with dimension and finiteness checks.
pub fn evaluate(field: &dyn VectorField, point: &[f64]) -> Result<Vec<f64>> {
    check_point(field, point)?;
    let mut out = vec![0.0; field.dim()];
    field.eval_into(point, &mut out);
    check_output(point, out)
}

/// `F(point, ξ_sample)` for a finite-sum field.
pub fn evaluate_stochastic(field: &dyn VectorField, point: &[f64], sample: usize) -> Result<Vec<f64>> {
    let n = field.n_samples().ok_or(Error::DeterministicField)?;
    if sample >= n {
        return Err(Error::SampleOutOfRange { index: sample, n_samples: n });
    }
    check_point(field, point)?;
    let mut out = vec![0.0; field.dim()];
    field.sample_eval_into(point, sample, &mut out);
    check_output(point, out)
}

/// An affine operator `F(ω) = A·ω + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineField {
    form: AffineForm,
    block_split: Option<usize>,
}

impl AffineField {
    pub fn new(matrix: Matrix, offset: Vec<f64>, block_split: Option<usize>) -> Result<Self> {
        if matrix.rows != matrix.cols {
            return Err(Error::DimensionMismatch { expected: matrix.rows, found: matrix.cols });
        }
        if offset.len() != matrix.rows {
            return Err(Error::DimensionMismatch { expected: matrix.rows, found: offset.len() });
        }
        if let Some(s) = block_split {
            if s == 0 || s >= matrix.rows {
                return Err(Error::InvalidBlockSplit { split: s, dim: matrix.rows });
            }
        }
        Ok(AffineField { form: AffineForm { matrix, offset }, block_split })
    }

    pub fn form(&self) -> &AffineForm {
        &self.form
    }
}

impl VectorField for AffineField {
    fn dim(&self) -> usize {
        self.form.matrix.rows
    }

    fn block_split(&self) -> Option<usize> {
        self.block_split
    }

    fn eval_into(&self, point: &[f64], out: &mut [f64]) {
        self.form.matrix.mul_vec_into(point, out);
        for (o, c) in out.iter_mut().zip(&self.form.offset) {
            *o += c;
        }
    }

    fn affine(&self) -> Option<AffineForm> {
        Some(self.form.clone())
    }
}

type EvalFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A field backed by a closure; handy for ad-hoc operators and tests.
pub struct FnField {
    dim: usize,
    block_split: Option<usize>,
    eval: EvalFn,
}

impl FnField {
    pub fn new(dim: usize, eval: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        FnField { dim, block_split: None, eval: Box::new(eval) }
    }

    pub fn with_block_split(mut self, split: usize) -> Self {
        self.block_split = Some(split);
        self
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("dim", &self.dim).field("block_split", &self.block_split).finish()
    }
}

impl VectorField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn block_split(&self) -> Option<usize> {
        self.block_split
    }

    fn eval_into(&self, point: &[f64], out: &mut [f64]) {
        (self.eval)(point, out)
    }
}
