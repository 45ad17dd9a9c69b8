//! Sampled certificates of monotonicity and Lipschitz continuity.
//!
//! These probe an operator on caller-supplied point pairs. They never prove a
//! property; a `monotone` verdict only says no supplied pair violated
//! `(F(ω) − F(ω'))ᵀ(ω − ω') ≥ 0`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::{evaluate, VectorField};
use crate::linalg::{dot, norm, sub};
use crate::rng;

/// Pairs closer than this are skipped.
pub const COINCIDENT_TOL: f64 = 1e-14;
/// Inner products below this count as a monotonicity violation.
pub const MONOTONE_TOL: f64 = -1e-12;

pub type PointPair = (Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub monotone: bool,
    /// The pair with the most negative inner product, when one violates monotonicity.
    pub witness: Option<PointPair>,
    /// `min (F(ω) − F(ω'))ᵀ(ω − ω') / ‖ω − ω'‖²` over the tested pairs.
    pub strong_monotonicity_lb: f64,
    /// `max ‖F(ω) − F(ω')‖ / ‖ω − ω'‖` over the tested pairs.
    pub lipschitz_est: f64,
    pub pairs_tested: usize,
}

struct PairStats {
    inner: f64,
    dist_sq: f64,
    grad_diff: f64,
}

fn pair_stats(field: &dyn VectorField, a: &[f64], b: &[f64]) -> Result<Option<PairStats>> {
    let d = sub(a, b);
    let dist = norm(&d);
    if dist.is_nan() || dist < COINCIDENT_TOL {
        return Ok(None);
    }
    let fd = sub(&evaluate(field, a)?, &evaluate(field, b)?);
    Ok(Some(PairStats { inner: dot(&fd, &d), dist_sq: dist * dist, grad_diff: norm(&fd) }))
}

pub fn check_monotone(field: &dyn VectorField, pairs: &[PointPair]) -> Result<ProbeReport> {
    if pairs.is_empty() {
        return Err(Error::NoPairs);
    }
    let mut tested = 0;
    let mut mu_lb = f64::INFINITY;
    let mut lip = 0.0f64;
    let mut worst: Option<(f64, usize)> = None;
    for (i, (a, b)) in pairs.iter().enumerate() {
        let Some(s) = pair_stats(field, a, b)? else { continue };
        tested += 1;
        mu_lb = mu_lb.min(s.inner / s.dist_sq);
        lip = lip.max(s.grad_diff / s.dist_sq.sqrt());
        if s.inner < MONOTONE_TOL && worst.is_none_or(|(w, _)| s.inner < w) {
            worst = Some((s.inner, i));
        }
    }
    if tested == 0 {
        return Err(Error::CoincidentPairs);
    }
    Ok(ProbeReport {
        monotone: worst.is_none(),
        witness: worst.map(|(_, i)| pairs[i].clone()),
        strong_monotonicity_lb: mu_lb,
        lipschitz_est: lip,
        pairs_tested: tested,
    })
}

/// Largest difference quotient over the pairs: a lower bound on the Lipschitz constant.
pub fn estimate_lipschitz(field: &dyn VectorField, pairs: &[PointPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::NoPairs);
    }
    let mut best: Option<f64> = None;
    for (a, b) in pairs {
        if let Some(s) = pair_stats(field, a, b)? {
            let q = s.grad_diff / s.dist_sq.sqrt();
            best = Some(best.map_or(q, |b| b.max(q)));
        }
    }
    best.ok_or(Error::CoincidentPairs)
}

/// `count` point pairs drawn uniformly from the cube `[lo, hi]^dim`.
pub fn random_pairs(dim: usize, lo: f64, hi: f64, count: usize, seed: u64) -> Vec<PointPair> {
    let mut r = rng::stream(seed, rng::Role::Probe);
    let mut draw = || (0..dim).map(|_| r.random_range(lo..=hi)).collect::<Vec<f64>>();
    (0..count).map(|_| (draw(), draw())).collect()
}
