use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An iterate `ω`, optionally split into the two players' blocks `(θ, φ)`.
///
/// Entries are always finite. When present, `block_split` is the index where
/// the first player's variables end, with `0 < block_split < dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct Point {
    values: Vec<f64>,
    block_split: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    block_split: Option<usize>,
}

impl TryFrom<RawPoint> for Point {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        match raw.block_split {
            Some(split) => Point::split(raw.values, split),
            None => Point::new(raw.values),
        }
    }
}

impl From<Point> for RawPoint {
    fn from(p: Point) -> Self {
        RawPoint { values: p.values, block_split: p.block_split }
    }
}

impl Point {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinitePoint(values));
        }
        Ok(Point { values, block_split: None })
    }

    /// A point whose first `split` coordinates belong to player one.
    pub fn split(values: Vec<f64>, split: usize) -> Result<Self> {
        let dim = values.len();
        if split == 0 || split >= dim {
            return Err(Error::InvalidBlockSplit { split, dim });
        }
        let mut p = Point::new(values)?;
        p.block_split = Some(split);
        Ok(p)
    }

    pub fn zeros(dim: usize) -> Self {
        Point { values: vec![0.0; dim], block_split: None }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn block_split(&self) -> Option<usize> {
        self.block_split
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// Player blocks `(θ, φ)`, when the point is split.
    pub fn blocks(&self) -> Option<(&[f64], &[f64])> {
        self.block_split.map(|s| self.values.split_at(s))
    }

    pub fn with_block_split(mut self, split: Option<usize>) -> Result<Self> {
        if let Some(s) = split {
            if s == 0 || s >= self.dim() {
                return Err(Error::InvalidBlockSplit { split: s, dim: self.dim() });
            }
        }
        self.block_split = split;
        Ok(self)
    }
}

impl AsRef<[f64]> for Point {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_entries() {
        assert!(matches!(Point::new(vec![1.0, f64::NAN]), Err(Error::NonFinitePoint(_))));
        assert!(Point::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn block_split_must_be_interior() {
        assert!(Point::split(vec![1.0, 2.0], 0).is_err());
        assert!(Point::split(vec![1.0, 2.0], 2).is_err());
        let p = Point::split(vec![1.0, 2.0, 3.0], 1).unwrap();
        assert_eq!(p.blocks(), Some((&[1.0][..], &[2.0, 3.0][..])));
    }

    #[test]
    fn json_round_trip_validates() {
        let p = Point::split(vec![0.5, -1.0], 1).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Point>(&s).unwrap(), p);
        assert!(serde_json::from_str::<Point>(r#"{"values":[1.0],"block_split":1}"#).is_err());
    }
}
