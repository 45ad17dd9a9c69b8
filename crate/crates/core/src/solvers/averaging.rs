//! Online iterate averaging `ω̄_t = (1 − ρ̃_t) ω̄_{t−1} + ρ̃_t ω_t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AveragingScheme {
    None,
    /// `ρ̃_t = 1/t`.
    Uniform,
    /// Weights proportional to the step size: `ρ̃_t = w_t / Σ_{s≤t} w_s`.
    #[default]
    StepWeighted,
    /// `ρ̃_t = 1 − β`; the first point initialises the average.
    Ema { beta: f64 },
}

impl AveragingScheme {
    pub fn validate(&self) -> Result<()> {
        if let AveragingScheme::Ema { beta } = *self {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(Error::InvalidParameter(format!("EMA beta must lie in (0, 1), got {beta}")));
            }
        }
        Ok(())
    }
}

/// Running state of an [`AveragingScheme`].
#[derive(Debug, Clone, PartialEq)]
pub struct Averager {
    scheme: AveragingScheme,
    average: Vec<f64>,
    total_weight: f64,
    count: usize,
}

impl Averager {
    pub fn new(scheme: AveragingScheme, dim: usize) -> Result<Self> {
        scheme.validate()?;
        Ok(Averager { scheme, average: vec![0.0; dim], total_weight: 0.0, count: 0 })
    }

    pub fn scheme(&self) -> AveragingScheme {
        self.scheme
    }

    /// Feeds `point` with weight `weight` (only used by `StepWeighted`, but
    /// validated for every scheme).
    pub fn update(&mut self, point: &[f64], weight: f64) -> Result<()> {
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(Error::InvalidParameter(format!("averaging weight must be positive, got {weight}")));
        }
        if point.len() != self.average.len() {
            return Err(Error::DimensionMismatch { expected: self.average.len(), found: point.len() });
        }
        self.count += 1;
        let rho = match self.scheme {
            AveragingScheme::None => return Ok(()),
            AveragingScheme::Uniform => 1.0 / self.count as f64,
            AveragingScheme::StepWeighted => {
                self.total_weight += weight;
                weight / self.total_weight
            }
            AveragingScheme::Ema { beta } => {
                if self.count == 1 {
                    1.0
                } else {
                    1.0 - beta
                }
            }
        };
        for (a, x) in self.average.iter_mut().zip(point) {
            *a += rho * (x - *a);
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// The current average, or `None` before the first point or when the
    /// scheme is `None`.
    pub fn value(&self) -> Option<&[f64]> {
        (self.count > 0 && self.scheme != AveragingScheme::None).then_some(self.average.as_slice())
    }
}

/// Feeds `point` into `state` and returns the new state.
pub fn update_average(mut state: Averager, point: &[f64], weight: f64) -> Result<Averager> {
    state.update(point, weight)?;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feed(scheme: AveragingScheme, pts: &[(f64, f64)]) -> f64 {
        let mut a = Averager::new(scheme, 1).unwrap();
        for &(x, w) in pts {
            a.update(&[x], w).unwrap();
        }
        a.value().unwrap()[0]
    }

    #[test]
    fn uniform_and_ema() {
        assert_eq!(feed(AveragingScheme::Uniform, &[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0)]), 2.0);
        assert_eq!(feed(AveragingScheme::Ema { beta: 0.5 }, &[(0.0, 1.0), (1.0, 1.0)]), 0.5);
    }

    #[test]
    fn step_weighted() {
        let pts = [(1.0, 0.5), (4.0, 0.25), (-2.0, 0.25)];
        let expect = (0.5 * 1.0 + 0.25 * 4.0 + 0.25 * -2.0) / (0.5 + 0.25 + 0.25);
        assert!((feed(AveragingScheme::StepWeighted, &pts) - expect).abs() < 1e-15);
        let equal: Vec<(f64, f64)> = (0..50).map(|i| ((i as f64).sin(), 0.3)).collect();
        let u = feed(AveragingScheme::Uniform, &equal);
        let w = feed(AveragingScheme::StepWeighted, &equal);
        assert!((u - w).abs() <= 1e-12 * u.abs().max(1.0));
    }

    #[test]
    fn rejects_bad_input() {
        let mut a = Averager::new(AveragingScheme::Uniform, 2).unwrap();
        assert!(a.update(&[1.0, 1.0], 0.0).is_err());
        assert!(a.update(&[1.0], 1.0).is_err());
        assert!(Averager::new(AveragingScheme::Ema { beta: 1.0 }, 2).is_err());
        let none = update_average(Averager::new(AveragingScheme::None, 1).unwrap(), &[1.0], 1.0).unwrap();
        assert_eq!(none.value(), None);
    }
}
