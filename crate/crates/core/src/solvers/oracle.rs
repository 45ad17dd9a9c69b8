//! Minibatch estimates of `F` with evaluation and draw accounting.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::field::VectorField;
use crate::rng::{self, Role};

/// Sample indices of one minibatch; empty for deterministic fields.
pub(crate) type Batch = Vec<usize>;

pub(crate) struct Oracle<'a> {
    field: &'a dyn VectorField,
    n_samples: Option<usize>,
    batch: usize,
    rng: ChaCha8Rng,
    scratch: Vec<f64>,
    pub evals: u64,
    pub draws: u64,
}

impl<'a> Oracle<'a> {
    pub fn new(field: &'a dyn VectorField, batch: usize, seed: u64) -> Self {
        Oracle {
            field,
            n_samples: field.n_samples(),
            batch,
            rng: rng::stream(seed, Role::Minibatch),
            scratch: vec![0.0; field.dim()],
            evals: 0,
            draws: 0,
        }
    }

    /// Draws `batch` indices uniformly with replacement.
    pub fn draw(&mut self) -> Batch {
        self.draws += 1;
        match self.n_samples {
            Some(n) => (0..self.batch).map(|_| self.rng.random_range(0..n)).collect(),
            None => Vec::new(),
        }
    }

    /// Writes the minibatch mean of `F(point, ξ)` into `out`. The mean is
    /// accumulated as `m += (x − m)/k`, so identical terms reproduce the single
    /// term bitwise. Returns whether the estimate is finite.
    pub fn eval(&mut self, point: &[f64], batch: &Batch, out: &mut [f64]) -> bool {
        self.evals += 1;
        match batch.as_slice() {
            [] => self.field.eval_into(point, out),
            [only] => self.field.sample_eval_into(point, *only, out),
            many => {
                out.iter_mut().for_each(|o| *o = 0.0);
                for (k, &i) in many.iter().enumerate() {
                    self.field.sample_eval_into(point, i, &mut self.scratch);
                    let inv = 1.0 / (k + 1) as f64;
                    for (o, x) in out.iter_mut().zip(&self.scratch) {
                        *o += (x - *o) * inv;
                    }
                }
            }
        }
        out.iter().all(|v| v.is_finite())
    }

    /// A fresh draw followed by an evaluation.
    pub fn sample(&mut self, point: &[f64], out: &mut [f64]) -> (Batch, bool) {
        let b = self.draw();
        let ok = self.eval(point, &b, out);
        (b, ok)
    }
}
