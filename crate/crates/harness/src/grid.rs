//! Step-size selection from a finished grid.

use std::collections::BTreeMap;

use crate::error::{HarnessError, Result};
use crate::records::ResultRecord;

/// The selected step size of one method.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub method: String,
    pub step_size: f64,
    /// Mean over seeds of the final metric value; infinite when any seed
    /// diverged.
    pub mean_final: f64,
    /// False when every step size diverged ("no convergent setting"); the
    /// smallest step size is then reported.
    pub convergent: bool,
}

#[derive(Default)]
struct Cell {
    /// seed → (iter, value, diverged) of the latest record.
    finals: BTreeMap<u64, (usize, f64, bool)>,
}

/// For each method (in order of first appearance), the step size minimizing
/// the mean final metric over seeds. Ties go to the smaller step size.
pub fn grid_search(records: &[ResultRecord]) -> Result<Vec<Selection>> {
    if records.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let mut order: Vec<&str> = Vec::new();
    let mut cells: BTreeMap<(&str, u64), Cell> = BTreeMap::new();
    for r in records {
        if !order.contains(&r.method.as_str()) {
            order.push(&r.method);
        }
        let cell = cells.entry((&r.method, r.step_size.to_bits())).or_default();
        let entry = cell.finals.entry(r.seed).or_insert((r.iter, r.value, r.diverged));
        if r.iter >= entry.0 {
            *entry = (r.iter, r.value, r.diverged || entry.2);
        }
    }

    let mut out = Vec::new();
    for method in order {
        let mut etas: Vec<(f64, &Cell)> =
            cells.iter().filter(|((m, _), _)| *m == method).map(|((_, bits), c)| (f64::from_bits(*bits), c)).collect();
        etas.sort_by(|a, b| a.0.total_cmp(&b.0));
        let seeds: Vec<&u64> = etas[0].1.finals.keys().collect();
        let mut best: Option<(f64, f64)> = None;
        for (eta, cell) in &etas {
            if cell.finals.keys().ne(seeds.iter().copied()) {
                return Err(HarnessError::IncompleteGrid(format!("{method} at step size {eta:e} covers different seeds")));
            }
            let mean = cell
                .finals
                .values()
                .map(|&(_, v, diverged)| if diverged || !v.is_finite() { f64::INFINITY } else { v })
                .sum::<f64>()
                / cell.finals.len() as f64;
            if best.is_none_or(|(_, m)| mean < m) {
                best = Some((*eta, mean));
            }
        }
        let (step_size, mean_final) = best.expect("at least one step size per method");
        out.push(Selection { method: method.to_string(), step_size, mean_final, convergent: mean_final.is_finite() });
    }
    Ok(out)
}
