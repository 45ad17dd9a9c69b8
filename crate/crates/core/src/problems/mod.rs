//! Games with known solutions, packaged as [`ProblemInstance`]s.

mod bilinear;
mod quadratic;
mod toy_gan;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use bilinear::{
    make_bilinear_1d, make_linear_wgan, make_stochastic_bilinear, solve_bilinear_equilibrium, BilinearField,
    BilinearSpec, PerSample, EQUILIBRIUM_BOUND, MAX_CONDITION,
};
pub use quadratic::{make_strongly_monotone, make_strongly_monotone_boxed};
pub use toy_gan::{make_toy_gan, ToyGan};

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::field::{evaluate, AffineField, AffineForm, VectorField};
use crate::linalg::{dot, sub};
use crate::point::Point;
use crate::rng::{self, Role};

/// Regularity constants of an instance: strong monotonicity `μ`, Lipschitz
/// constant `L` and noise level `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    pub mu: f64,
    pub lipschitz: f64,
    pub noise_sigma: f64,
}

/// Serializable description of an operator, enough to rebuild it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    Bilinear { spec: BilinearSpec },
    Affine { form: AffineForm, block_split: Option<usize> },
    ToyGan { omega_star: f64 },
}

impl FieldSource {
    fn build(&self) -> Result<Arc<dyn VectorField>> {
        Ok(match self {
            FieldSource::Bilinear { spec } => Arc::new(BilinearField::new(spec.clone())?),
            FieldSource::Affine { form, block_split } => {
                Arc::new(AffineField::new(form.matrix.clone(), form.offset.clone(), *block_split)?)
            }
            FieldSource::ToyGan { omega_star } => Arc::new(ToyGan::new(*omega_star)?),
        })
    }
}

/// JSON form of a [`ProblemInstance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub label: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub field: FieldSource,
    pub constraints: ConstraintSet,
    #[serde(default)]
    pub equilibrium: Option<Point>,
    #[serde(default)]
    pub constants: Option<Constants>,
    #[serde(default)]
    pub reference_point: Option<Point>,
}

/// An operator, its feasible set and, when known, its solution and constants.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    field: Arc<dyn VectorField>,
    source: FieldSource,
    constraints: ConstraintSet,
    equilibrium: Option<Point>,
    constants: Option<Constants>,
    reference_point: Option<Point>,
    label: String,
    seed: Option<u64>,
}

/// Tolerance used when checking that stored points are feasible.
const FEASIBILITY_TOL: f64 = 1e-12;

impl ProblemInstance {
    pub(crate) fn assemble(
        source: FieldSource,
        constraints: ConstraintSet,
        equilibrium: Option<Point>,
        constants: Option<Constants>,
        label: String,
        seed: Option<u64>,
    ) -> Result<Self> {
        let field = source.build()?;
        constraints.validate()?;
        constraints.check_dim(field.dim())?;
        let equilibrium = equilibrium.map(|p| Self::adopt_point(field.as_ref(), &constraints, p)).transpose()?;
        if let Some(c) = &constants {
            if !(c.mu >= 0.0) || !(c.lipschitz > 0.0) || !(c.noise_sigma >= 0.0) {
                return Err(Error::InvalidParameter(format!("invalid constants {c:?}")));
            }
        }
        Ok(ProblemInstance { field, source, constraints, equilibrium, constants, reference_point: None, label, seed })
    }

    fn adopt_point(field: &dyn VectorField, constraints: &ConstraintSet, p: Point) -> Result<Point> {
        if p.dim() != field.dim() {
            return Err(Error::DimensionMismatch { expected: field.dim(), found: p.dim() });
        }
        if !constraints.contains(p.as_slice(), FEASIBILITY_TOL) {
            return Err(Error::InvalidParameter("stored point lies outside the feasible set".into()));
        }
        p.with_block_split(field.block_split())
    }

    pub(crate) fn with_reference_point(mut self, point: Point) -> Result<Self> {
        self.reference_point = Some(Self::adopt_point(self.field.as_ref(), &self.constraints, point)?);
        Ok(self)
    }

    pub fn field(&self) -> &dyn VectorField {
        self.field.as_ref()
    }

    pub fn field_arc(&self) -> Arc<dyn VectorField> {
        Arc::clone(&self.field)
    }

    pub fn source(&self) -> &FieldSource {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    pub fn equilibrium(&self) -> Option<&Point> {
        self.equilibrium.as_ref()
    }

    pub fn constants(&self) -> Option<&Constants> {
        self.constants.as_ref()
    }

    /// A distinguished point for games without a claimed solution, such as a
    /// known stationary point.
    pub fn reference_point(&self) -> Option<&Point> {
        self.reference_point.as_ref()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// The same problem on a different feasible set. The stored solution is
    /// kept only if it still satisfies the variational inequality there.
    pub fn with_constraints(&self, constraints: ConstraintSet) -> Result<Self> {
        let mut out = Self::assemble(
            self.source.clone(),
            constraints,
            None,
            self.constants,
            self.label.clone(),
            self.seed,
        )?;
        if let Some(eq) = &self.equilibrium {
            if out.constraints.contains(eq.as_slice(), FEASIBILITY_TOL) {
                out.equilibrium = Some(eq.clone());
                if out.equilibrium_residual()? > 1e-9 {
                    out.equilibrium = None;
                }
            }
        }
        Ok(out)
    }

    /// How far the stored solution is from satisfying the variational
    /// inequality. Unconstrained: `‖F(ω*)‖`. Constrained: the largest value of
    /// `−F(ω*)ᵀ(ω − ω*)` over 100 sampled feasible `ω` (zero when none is
    /// negative).
    pub fn equilibrium_residual(&self) -> Result<f64> {
        let eq = self.equilibrium.as_ref().ok_or(Error::MissingEquilibrium)?;
        let f = evaluate(self.field(), eq.as_slice())?;
        if self.constraints.is_unconstrained() {
            return Ok(f.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        let mut r = rng::stream(self.seed.unwrap_or(0), Role::Probe);
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let mut w: Vec<f64> = eq.as_slice().iter().map(|c| c + r.random_range(-4.0..=4.0)).collect();
            self.constraints.project_in_place(&mut w);
            worst = worst.max(-dot(&f, &sub(&w, eq.as_slice())));
        }
        Ok(worst)
    }

    pub fn to_document(&self) -> ProblemDocument {
        ProblemDocument {
            label: self.label.clone(),
            seed: self.seed,
            field: self.source.clone(),
            constraints: self.constraints.clone(),
            equilibrium: self.equilibrium.clone(),
            constants: self.constants,
            reference_point: self.reference_point.clone(),
        }
    }

    pub fn from_document(doc: ProblemDocument) -> Result<Self> {
        let out = Self::assemble(doc.field, doc.constraints, doc.equilibrium, doc.constants, doc.label, doc.seed)?;
        match doc.reference_point {
            Some(p) => out.with_reference_point(p),
            None => Ok(out),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("problem documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProblemDocument =
            serde_json::from_str(text).map_err(|e| Error::InvalidParameter(format!("problem document: {e}")))?;
        Self::from_document(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_preserves_the_operator() {
        let probes = [vec![0.3, -0.2], vec![1.5, 2.5]];
        for p in [
            make_bilinear_1d(),
            make_toy_gan(-2.0),
            make_strongly_monotone(0.1, 1.0, Point::new(vec![0.5, -0.25]).unwrap()).unwrap(),
        ] {
            let back = ProblemInstance::from_json(&p.to_json()).unwrap();
            assert_eq!(back.to_document(), p.to_document());
            for x in &probes {
                assert_eq!(evaluate(back.field(), x).unwrap(), evaluate(p.field(), x).unwrap());
            }
        }
        let s = make_stochastic_bilinear(6, 3, 0.4, 5).unwrap();
        let back = ProblemInstance::from_json(&s.to_json()).unwrap();
        assert_eq!(back.field().bilinear(), s.field().bilinear());
    }

    #[test]
    fn malformed_documents_are_rejected() {
        let mut doc: serde_json::Value = serde_json::from_str(&make_bilinear_1d().to_json()).unwrap();
        doc["surprise"] = serde_json::json!(1);
        assert!(ProblemInstance::from_json(&doc.to_string()).is_err());

        let mut doc: serde_json::Value = serde_json::from_str(&make_bilinear_1d().to_json()).unwrap();
        doc["equilibrium"] = serde_json::json!({"values": [0.0, 0.0, 0.0]});
        assert!(ProblemInstance::from_json(&doc.to_string()).is_err());
    }

    #[test]
    fn every_generated_problem_satisfies_its_equilibrium() {
        let problems = vec![
            make_bilinear_1d(),
            make_linear_wgan(1.0, 2.0, false).unwrap(),
            make_linear_wgan(1.0, 2.0, true).unwrap(),
            make_stochastic_bilinear(100, 20, 0.5, 7).unwrap(),
            make_stochastic_bilinear(1, 1, 0.0, 1).unwrap(),
            make_strongly_monotone(0.1, 1.0, Point::zeros(2)).unwrap(),
            make_strongly_monotone_boxed(0.1, 1.0, Point::new(vec![0.3, -0.7]).unwrap(), -2.0, 2.0).unwrap(),
        ];
        for p in &problems {
            assert!(p.equilibrium_residual().unwrap() <= 1e-9, "{}", p.label());
        }
        assert_eq!(make_toy_gan(-2.0).equilibrium_residual(), Err(Error::MissingEquilibrium));
    }

    #[test]
    fn restricting_the_feasible_set() {
        let p = make_bilinear_1d();
        let boxed = p.with_constraints(ConstraintSet::cube(2, -1.0, 1.0).unwrap()).unwrap();
        assert!(boxed.equilibrium().is_some());
        let away = p.with_constraints(ConstraintSet::cube(2, 1.0, 2.0).unwrap()).unwrap();
        assert!(away.equilibrium().is_none());
    }
}
