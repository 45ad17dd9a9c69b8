//! Feasible sets `Ω` and Euclidean projection onto them.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm;

/// Slack on the ball-membership test, so that an already projected point is
/// recognised as feasible despite rounding in its norm.
const BALL_SLACK: f64 = 4.0 * f64::EPSILON;

/// A closed convex feasible region.
///
/// Build sets through the checked constructors ([`ConstraintSet::cube`],
/// [`ConstraintSet::bounds`], [`ConstraintSet::ball`], [`ConstraintSet::product`]);
/// projection assumes a valid set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawSet", into = "RawSet")]
pub enum ConstraintSet {
    Unconstrained,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    L2Ball { center: Vec<f64>, radius: f64 },
    Product { factors: Vec<Factor> },
}

/// One factor of a product set together with the number of coordinates it owns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub set: ConstraintSet,
    pub dim: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawSet {
    Unconstrained,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    L2Ball { center: Vec<f64>, radius: f64 },
    Product { factors: Vec<Factor> },
}

impl TryFrom<RawSet> for ConstraintSet {
    type Error = Error;

    fn try_from(raw: RawSet) -> Result<Self> {
        let set = match raw {
            RawSet::Unconstrained => ConstraintSet::Unconstrained,
            RawSet::Box { lower, upper } => ConstraintSet::Box { lower, upper },
            RawSet::L2Ball { center, radius } => ConstraintSet::L2Ball { center, radius },
            RawSet::Product { factors } => ConstraintSet::Product { factors },
        };
        set.validate()?;
        Ok(set)
    }
}

impl From<ConstraintSet> for RawSet {
    fn from(set: ConstraintSet) -> Self {
        match set {
            ConstraintSet::Unconstrained => RawSet::Unconstrained,
            ConstraintSet::Box { lower, upper } => RawSet::Box { lower, upper },
            ConstraintSet::L2Ball { center, radius } => RawSet::L2Ball { center, radius },
            ConstraintSet::Product { factors } => RawSet::Product { factors },
        }
    }
}

impl ConstraintSet {
    /// The box `[lower, upper]^dim`.
    pub fn cube(dim: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::bounds(vec![lower; dim], vec![upper; dim])
    }

    pub fn bounds(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let set = ConstraintSet::Box { lower, upper };
        set.validate()?;
        Ok(set)
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let set = ConstraintSet::L2Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn product(factors: Vec<Factor>) -> Result<Self> {
        let set = ConstraintSet::Product { factors };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConstraintSet::Unconstrained => Ok(()),
            ConstraintSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(Error::InvalidConstraint(format!(
                        "box bounds have lengths {} and {}",
                        lower.len(),
                        upper.len()
                    )));
                }
                for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if l.is_nan() || u.is_nan() || l > u {
                        return Err(Error::InvalidConstraint(format!(
                            "box coordinate {i}: lower {l} exceeds upper {u}"
                        )));
                    }
                }
                Ok(())
            }
            ConstraintSet::L2Ball { center, radius } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidConstraint(format!("ball radius {radius} must be positive")));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidConstraint("ball center must be finite".into()));
                }
                Ok(())
            }
            ConstraintSet::Product { factors } => {
                if factors.is_empty() {
                    return Err(Error::InvalidConstraint("product of zero factors".into()));
                }
                for f in factors {
                    f.set.validate()?;
                    if f.dim == 0 {
                        return Err(Error::InvalidConstraint("product factor of dimension 0".into()));
                    }
                    if let Some(d) = f.set.ambient_dim() {
                        if d != f.dim {
                            return Err(Error::InvalidConstraint(format!(
                                "product factor declares dim {} but its set has dim {d}",
                                f.dim
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// The dimension the set lives in; `None` for `Unconstrained`, which
    /// accepts any dimension.
    pub fn ambient_dim(&self) -> Option<usize> {
        match self {
            ConstraintSet::Unconstrained => None,
            ConstraintSet::Box { lower, .. } => Some(lower.len()),
            ConstraintSet::L2Ball { center, .. } => Some(center.len()),
            ConstraintSet::Product { factors } => Some(factors.iter().map(|f| f.dim).sum()),
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        match self {
            ConstraintSet::Unconstrained => true,
            ConstraintSet::Product { factors } => factors.iter().all(|f| f.set.is_unconstrained()),
            _ => false,
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        match self.ambient_dim() {
            Some(expected) if expected != dim => Err(Error::DimensionMismatch { expected, found: dim }),
            _ => Ok(()),
        }
    }

    /// Whether `x` lies in the set up to an absolute slack `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if self.check_dim(x.len()).is_err() {
            return false;
        }
        match self {
            ConstraintSet::Unconstrained => true,
            ConstraintSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            ConstraintSet::L2Ball { center, radius } => distance(x, center) <= radius + tol,
            ConstraintSet::Product { factors } => {
                let mut start = 0;
                factors.iter().all(|f| {
                    let ok = f.set.contains(&x[start..start + f.dim], tol);
                    start += f.dim;
                    ok
                })
            }
        }
    }

    /// Projects `x` in place. The caller guarantees matching dimensions.
    pub fn project_in_place(&self, x: &mut [f64]) {
        match self {
            ConstraintSet::Unconstrained => {}
            ConstraintSet::Box { lower, upper } => {
                for ((v, l), u) in x.iter_mut().zip(lower).zip(upper) {
                    *v = v.clamp(*l, *u);
                }
            }
            ConstraintSet::L2Ball { center, radius } => {
                let dist = distance(x, center);
                if dist > radius * (1.0 + BALL_SLACK) {
                    let scale = radius / dist;
                    for (v, c) in x.iter_mut().zip(center) {
                        *v = c + (*v - c) * scale;
                    }
                }
            }
            ConstraintSet::Product { factors } => {
                let mut start = 0;
                for f in factors {
                    f.set.project_in_place(&mut x[start..start + f.dim]);
                    start += f.dim;
                }
            }
        }
    }

    /// The factor of the set acting on coordinates `range`, when the set
    /// separates there.
    pub fn restrict(&self, range: Range<usize>) -> Option<ConstraintSet> {
        match self {
            ConstraintSet::Unconstrained => Some(ConstraintSet::Unconstrained),
            ConstraintSet::Box { lower, upper } => Some(ConstraintSet::Box {
                lower: lower.get(range.clone())?.to_vec(),
                upper: upper.get(range)?.to_vec(),
            }),
            ConstraintSet::L2Ball { center, .. } => {
                if range.start == 0 && range.end == center.len() {
                    Some(self.clone())
                } else {
                    None
                }
            }
            ConstraintSet::Product { factors } => {
                let mut start = 0;
                let mut picked = Vec::new();
                for f in factors {
                    let end = start + f.dim;
                    if start >= range.start && end <= range.end {
                        picked.push(f.clone());
                    } else if start < range.end && end > range.start {
                        // Straddles the boundary: only a separable factor can be cut.
                        let lo = range.start.max(start) - start;
                        let hi = range.end.min(end) - start;
                        let set = f.set.restrict(lo..hi)?;
                        picked.push(Factor { set, dim: hi - lo });
                    }
                    start = end;
                }
                if picked.len() == 1 {
                    picked.pop().map(|f| f.set)
                } else {
                    Some(ConstraintSet::Product { factors: picked })
                }
            }
        }
    }
}

/// Euclidean projection of `point` onto `set`.
pub fn project(set: &ConstraintSet, point: &[f64]) -> Result<Vec<f64>> {
    set.check_dim(point.len())?;
    let mut out = point.to_vec();
    set.project_in_place(&mut out);
    Ok(out)
}

fn distance(x: &[f64], c: &[f64]) -> f64 {
    let diff: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
    norm(&diff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unconstrained_is_identity() {
        assert_eq!(project(&ConstraintSet::Unconstrained, &[3.2, -7.0]).unwrap(), vec![3.2, -7.0]);
    }

    #[test]
    fn box_clamps_componentwise() {
        let set = ConstraintSet::cube(2, -1.0, 1.0).unwrap();
        assert_eq!(project(&set, &[2.0, 0.5]).unwrap(), vec![1.0, 0.5]);
    }

    #[test]
    fn ball_rescales_onto_sphere() {
        let set = ConstraintSet::ball(vec![0.0, 0.0], 1.0).unwrap();
        let p = project(&set, &[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let set = ConstraintSet::cube(3, -1.0, 1.0).unwrap();
        assert_eq!(
            project(&set, &[0.0, 0.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        );
    }

    #[test]
    fn invalid_sets_are_rejected() {
        assert!(ConstraintSet::bounds(vec![1.0], vec![0.0]).is_err());
        assert!(ConstraintSet::ball(vec![0.0], 0.0).is_err());
        assert!(ConstraintSet::product(vec![Factor { set: ConstraintSet::cube(2, 0.0, 1.0).unwrap(), dim: 3 }]).is_err());
        assert!(serde_json::from_str::<ConstraintSet>(r#"{"kind":"l2_ball","center":[0.0],"radius":-1.0}"#).is_err());
    }

    #[test]
    fn product_projects_blockwise() {
        let set = ConstraintSet::product(vec![
            Factor { set: ConstraintSet::Unconstrained, dim: 1 },
            Factor { set: ConstraintSet::ball(vec![0.0, 0.0], 1.0).unwrap(), dim: 2 },
        ])
        .unwrap();
        let p = project(&set, &[5.0, 0.0, 2.0]).unwrap();
        assert_eq!(p, vec![5.0, 0.0, 1.0]);
        assert_eq!(set.restrict(0..1), Some(ConstraintSet::Unconstrained));
        assert!(set.restrict(0..2).is_none());
    }

    #[test]
    fn json_round_trip() {
        let set = ConstraintSet::cube(2, -1.0, 1.0).unwrap();
        let s = serde_json::to_string(&set).unwrap();
        assert_eq!(serde_json::from_str::<ConstraintSet>(&s).unwrap(), set);
    }

    fn arb_set(dim: usize) -> impl Strategy<Value = ConstraintSet> {
        let bx = (prop::collection::vec(-2.0..0.0f64, dim), prop::collection::vec(0.0..2.0f64, dim))
            .prop_map(|(l, u)| ConstraintSet::bounds(l, u).unwrap());
        let ball = (prop::collection::vec(-1.0..1.0f64, dim), 0.1..3.0f64)
            .prop_map(|(c, r)| ConstraintSet::ball(c, r).unwrap());
        let split = (1..dim).prop_map(move |s| {
            ConstraintSet::product(vec![
                Factor { set: ConstraintSet::cube(s, -0.5, 0.5).unwrap(), dim: s },
                Factor { set: ConstraintSet::ball(vec![0.0; dim - s], 1.0).unwrap(), dim: dim - s },
            ])
            .unwrap()
        });
        prop_oneof![Just(ConstraintSet::Unconstrained), bx, ball, split]
    }

    proptest! {
        #[test]
        fn projection_is_nonexpansive_and_idempotent(
            set in arb_set(4),
            x in prop::collection::vec(-10.0..10.0f64, 4),
            y in prop::collection::vec(-10.0..10.0f64, 4),
        ) {
            let px = project(&set, &x).unwrap();
            let py = project(&set, &y).unwrap();
            prop_assert!(distance(&px, &py) <= distance(&x, &y) + 1e-12);
            prop_assert_eq!(project(&set, &px).unwrap(), px.clone());
            prop_assert!(set.contains(&px, 1e-12));
            if set.contains(&x, 0.0) {
                prop_assert_eq!(&px, &x);
            }
        }
    }
}
