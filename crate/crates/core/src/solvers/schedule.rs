use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step size `η_t` as a function of the iteration counter `t = 0, 1, …`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepSizeSchedule {
    Constant { eta: f64 },
    /// `η_t = η₀ / √(t + 1)`.
    InverseSqrt { eta0: f64 },
}

impl StepSizeSchedule {
    pub fn constant(eta: f64) -> Self {
        StepSizeSchedule::Constant { eta }
    }

    pub fn validate(&self) -> Result<()> {
        let base = self.base();
        if base > 0.0 && base.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("step size must be positive and finite, got {base}")))
        }
    }

    pub fn base(&self) -> f64 {
        match *self {
            StepSizeSchedule::Constant { eta } => eta,
            StepSizeSchedule::InverseSqrt { eta0 } => eta0,
        }
    }

    pub fn at(&self, t: usize) -> f64 {
        match *self {
            StepSizeSchedule::Constant { eta } => eta,
            StepSizeSchedule::InverseSqrt { eta0 } => eta0 / ((t + 1) as f64).sqrt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedules() {
        assert_eq!(StepSizeSchedule::constant(0.1).at(1000), 0.1);
        let s = StepSizeSchedule::InverseSqrt { eta0: 0.5 };
        assert_eq!(s.at(0), 0.5);
        assert_eq!(s.at(3), 0.25);
        assert!(StepSizeSchedule::constant(0.0).validate().is_err());
        assert!(StepSizeSchedule::constant(f64::NAN).validate().is_err());
    }
}
