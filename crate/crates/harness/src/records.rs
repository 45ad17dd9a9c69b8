//! Long-format CSV records.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which parses back
//! to the same `f64`. Lines end in `\n`.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{HarnessError, Result};

pub const RESULTS_HEADER: [&str; 8] = ["method", "step_size", "seed", "iter", "metric", "value", "diverged", "eval_count"];
pub const TRAJECTORY_HEADER: [&str; 6] = ["method", "step_size", "seed", "iter", "theta", "phi"];

/// One sample of one metric series.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    pub method: String,
    pub step_size: f64,
    /// The run seed from the config (not the derived cell seed).
    pub seed: u64,
    pub iter: usize,
    pub metric: String,
    pub value: f64,
    /// Set on the final record of a run that blew up.
    pub diverged: bool,
    /// Operator evaluations spent up to `iter`.
    pub eval_count: u64,
}

/// A sampled iterate of a two-dimensional game.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub method: String,
    pub step_size: f64,
    pub seed: u64,
    pub iter: usize,
    pub theta: f64,
    pub phi: f64,
}

pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

pub fn write_results<W: Write>(records: &[ResultRecord], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.write_record([
            r.method.clone(),
            format_f64(r.step_size),
            r.seed.to_string(),
            r.iter.to_string(),
            r.metric.clone(),
            format_f64(r.value),
            r.diverged.to_string(),
            r.eval_count.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes `records` to `path` in the results format.
pub fn emit_csv(records: &[ResultRecord], path: &Path) -> Result<()> {
    write_results(records, create(path)?)
}

pub fn write_trajectories<W: Write>(records: &[TrajectoryRecord], out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for r in records {
        w.write_record([
            r.method.clone(),
            format_f64(r.step_size),
            r.seed.to_string(),
            r.iter.to_string(),
            format_f64(r.theta),
            format_f64(r.phi),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn emit_trajectories(records: &[TrajectoryRecord], path: &Path) -> Result<()> {
    write_trajectories(records, create(path)?)
}

struct Rows {
    source: String,
    reader: csv::Reader<Box<dyn Read>>,
}

impl Rows {
    fn open(source: String, input: Box<dyn Read>, header: &[&str]) -> Result<Rows> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let found = reader.headers()?.clone();
        if found.iter().ne(header.iter().copied()) {
            return Err(HarnessError::Parse {
                path: source,
                line: 1,
                message: format!("expected header {}, found {}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
            });
        }
        Ok(Rows { source, reader })
    }

    fn each(mut self, mut row: impl FnMut(&Field) -> Result<()>) -> Result<()> {
        for rec in self.reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            row(&Field { rec: &rec, source: &self.source, line })?;
        }
        Ok(())
    }
}

struct Field<'a> {
    rec: &'a csv::StringRecord,
    source: &'a str,
    line: u64,
}

impl Field<'_> {
    fn get<T: std::str::FromStr>(&self, i: usize, name: &str) -> Result<T> {
        let raw = self.rec.get(i).unwrap_or("");
        raw.parse().map_err(|_| HarnessError::Parse {
            path: self.source.to_string(),
            line: self.line,
            message: format!("bad {name} {raw:?}"),
        })
    }
}

pub fn read_results<R: Read + 'static>(input: R, source: &str) -> Result<Vec<ResultRecord>> {
    let mut out = Vec::new();
    Rows::open(source.to_string(), Box::new(input), &RESULTS_HEADER)?.each(|f| {
        out.push(ResultRecord {
            method: f.get(0, "method")?,
            step_size: f.get(1, "step_size")?,
            seed: f.get(2, "seed")?,
            iter: f.get(3, "iter")?,
            metric: f.get(4, "metric")?,
            value: f.get(5, "value")?,
            diverged: f.get(6, "diverged")?,
            eval_count: f.get(7, "eval_count")?,
        });
        Ok(())
    })?;
    Ok(out)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| HarnessError::Read { path: path.to_path_buf(), source })
}

pub fn load_results(path: &Path) -> Result<Vec<ResultRecord>> {
    read_results(open(path)?, &path.display().to_string())
}

pub fn read_trajectories<R: Read + 'static>(input: R, source: &str) -> Result<Vec<TrajectoryRecord>> {
    let mut out = Vec::new();
    Rows::open(source.to_string(), Box::new(input), &TRAJECTORY_HEADER)?.each(|f| {
        out.push(TrajectoryRecord {
            method: f.get(0, "method")?,
            step_size: f.get(1, "step_size")?,
            seed: f.get(2, "seed")?,
            iter: f.get(3, "iter")?,
            theta: f.get(4, "theta")?,
            phi: f.get(5, "phi")?,
        });
        Ok(())
    })?;
    Ok(out)
}

pub fn load_trajectories(path: &Path) -> Result<Vec<TrajectoryRecord>> {
    read_trajectories(open(path)?, &path.display().to_string())
}
