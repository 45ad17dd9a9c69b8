//! Standalone SVG figures: convergence curves on a log scale, and iterate
//! paths over the vector field of two-dimensional games.
//!
//! Output is a pure function of the inputs; coordinates are printed with two
//! decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use viopt_core::problems::ProblemInstance;

use crate::error::{HarnessError, Result};
use crate::grid::{grid_search, Selection};
use crate::records::{ResultRecord, TrajectoryRecord};

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 230.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOptions {
    pub width: f64,
    pub height: f64,
    pub title: Option<String>,
}

impl Default for PlotOptions {
    fn default() -> Self {
        PlotOptions { width: 760.0, height: 480.0, title: None }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// The mean-over-seeds curve of one method at its selected step size.
struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    /// Iteration at which the first seed blew up.
    diverged_at: Option<f64>,
}

fn series_for(records: &[ResultRecord], sel: &Selection) -> Series {
    let mut per_seed: BTreeMap<u64, Vec<&ResultRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.method == sel.method && r.step_size == sel.step_size) {
        per_seed.entry(r.seed).or_default().push(r);
    }
    let diverged_at = per_seed.values().flatten().filter(|r| r.diverged).map(|r| r.iter).min();
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in per_seed.values().flatten() {
        if diverged_at.is_some_and(|d| r.iter >= d) || !r.value.is_finite() {
            continue;
        }
        let e = sums.entry(r.iter).or_insert((0.0, 0));
        e.0 += r.value;
        e.1 += 1;
    }
    let seeds = per_seed.len();
    let points = sums.into_iter().filter(|(_, (_, n))| *n == seeds).map(|(i, (s, n))| (i as f64, s / n as f64)).collect();
    let mut label = format!("{} (η={:e})", sel.method, sel.step_size);
    if !sel.convergent {
        label.push_str(", no convergent setting");
    }
    Series { label, points, diverged_at: diverged_at.map(|d| d as f64) }
}

fn header(out: &mut String, opts: &PlotOptions) {
    let (w, h) = (opts.width, opts.height);
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    if let Some(t) = &opts.title {
        writeln!(out, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#, w / 2.0, escape(t)).unwrap();
    }
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn new(opts: &PlotOptions, x: (f64, f64), y: (f64, f64)) -> Frame {
        Frame {
            x0: x.0,
            x1: x.1,
            y0: y.0,
            y1: y.1,
            left: MARGIN_LEFT,
            right: opts.width - MARGIN_RIGHT,
            top: MARGIN_TOP,
            bottom: opts.height - MARGIN_BOTTOM,
        }
    }

    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x0) / (self.x1 - self.x0) * (self.right - self.left)
    }

    fn py(&self, y: f64) -> f64 {
        self.bottom - (y - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)
    }

    fn axes(&self, out: &mut String, xlabel: &str, ylabel: &str) {
        writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            self.left,
            self.top,
            self.right - self.left,
            self.bottom - self.top
        )
        .unwrap();
        writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (self.left + self.right) / 2.0, self.bottom + 38.0, escape(xlabel)).unwrap();
        let cy = (self.top + self.bottom) / 2.0;
        writeln!(out, r#"<text x="16" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 16 {cy:.2})">{}</text>"#, escape(ylabel)).unwrap();
    }

    fn xtick(&self, out: &mut String, x: f64, label: &str) {
        let px = self.px(x);
        writeln!(out, r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/>"#, self.bottom, self.bottom + 5.0).unwrap();
        writeln!(out, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, self.bottom + 18.0).unwrap();
    }

    fn ytick(&self, out: &mut String, y: f64, label: &str) {
        let py = self.py(y);
        writeln!(out, r##"<line x1="{:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/>"##, self.left, self.right).unwrap();
        writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, self.left - 6.0, py + 4.0).unwrap();
    }
}

fn legend(out: &mut String, opts: &PlotOptions, entries: &[(String, &'static str)]) {
    let x = opts.width - MARGIN_RIGHT + 14.0;
    for (i, (label, col)) in entries.iter().enumerate() {
        let y = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        writeln!(out, r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{col}" stroke-width="2"/>"#, x + 22.0).unwrap();
        writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 28.0, y + 4.0, escape(label)).unwrap();
    }
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

/// Renders one log-scale convergence curve per method, at the step size
/// chosen by [`grid_search`] and averaged over seeds.
pub fn render_plot(records: &[ResultRecord], opts: &PlotOptions) -> Result<String> {
    if records.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let selections = grid_search(records)?;
    let series: Vec<Series> = selections.iter().map(|s| series_for(records, s)).collect();
    let metric = records[0].metric.clone();

    let positive = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|v| *v > 0.0);
    let (lo, hi) = positive.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (mut d0, mut d1) = if lo.is_finite() { (lo.log10().floor(), hi.log10().ceil()) } else { (-16.0, 0.0) };
    if d1 <= d0 {
        d0 -= 1.0;
        d1 += 1.0;
    }
    let max_iter = records.iter().map(|r| r.iter).max().unwrap_or(0).max(1) as f64;
    let frame = Frame::new(opts, (0.0, max_iter), (d0, d1));

    let mut out = String::new();
    header(&mut out, opts);
    let step = nice_step(max_iter, 5);
    let mut x = 0.0;
    while x <= max_iter + 1e-9 {
        frame.xtick(&mut out, x, &format!("{x}"));
        x += step;
    }
    let every = ((d1 - d0) / 10.0).ceil().max(1.0) as i64;
    for d in (d0 as i64..=d1 as i64).filter(|d| (d - d0 as i64) % every == 0) {
        frame.ytick(&mut out, d as f64, &format!("1e{d}"));
    }
    frame.axes(&mut out, "iteration", &format!("{metric} (log scale)"));

    let floor = 10f64.powf(d0);
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<String> =
            s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y.max(floor).log10()))).collect();
        writeln!(out, r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#, color(i), pts.join(" ")).unwrap();
        if let Some(d) = s.diverged_at {
            let (px, py) = (frame.px(d), frame.py(d1));
            writeln!(
                out,
                r#"<path d="M{:.2},{:.2}L{:.2},{:.2}M{:.2},{:.2}L{:.2},{:.2}" stroke="{}" stroke-width="2"><title>diverged</title></path>"#,
                px - 5.0,
                py - 5.0,
                px + 5.0,
                py + 5.0,
                px - 5.0,
                py + 5.0,
                px + 5.0,
                py - 5.0,
                color(i)
            )
            .unwrap();
        }
    }
    let entries: Vec<(String, &'static str)> = series.iter().enumerate().map(|(i, s)| (s.label.clone(), color(i))).collect();
    legend(&mut out, opts, &entries);
    out.push_str("</svg>\n");
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| HarnessError::Write { path: path.to_path_buf(), source })
}

pub fn emit_plot(records: &[ResultRecord], path: &Path, opts: &PlotOptions) -> Result<()> {
    write(path, &render_plot(records, opts)?)
}

/// Renders iterate paths of a two-dimensional game in the `(θ, φ)` plane over
/// arrows of the dynamics `−F`. One path per selected method, at its selected
/// step size and first seed.
pub fn render_plane(
    problem: &ProblemInstance,
    trajectories: &[TrajectoryRecord],
    selections: &[Selection],
    opts: &PlotOptions,
) -> Result<String> {
    if problem.dim() != 2 {
        return Err(HarnessError::config("problem", format!("plane plots need a two-dimensional game, got dimension {}", problem.dim())));
    }
    let mut paths = Vec::new();
    for sel in selections {
        let chosen: Vec<&TrajectoryRecord> =
            trajectories.iter().filter(|t| t.method == sel.method && t.step_size == sel.step_size).collect();
        let Some(first) = chosen.first() else {
            return Err(HarnessError::IncompleteGrid(format!("no trajectory for {} at step size {:e}", sel.method, sel.step_size)));
        };
        let points: Vec<(f64, f64)> = chosen
            .iter()
            .filter(|t| t.seed == first.seed && t.theta.is_finite() && t.phi.is_finite())
            .map(|t| (t.theta, t.phi))
            .collect();
        paths.push((format!("{} (η={:e})", sel.method, sel.step_size), points, sel.convergent));
    }

    let target = problem.equilibrium().map(|e| e.as_slice().to_vec()).or_else(|| problem.reference_point().map(|r| r.as_slice().to_vec()));
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    // Diverging paths would stretch the view; they are clipped instead.
    let any_convergent = paths.iter().any(|p| p.2);
    for (_, pts, _) in paths.iter().filter(|p| p.2 || !any_convergent) {
        for &(x, y) in pts.iter().filter(|(x, y)| x.abs() < 1e6 && y.abs() < 1e6) {
            xs.push(x);
            ys.push(y);
        }
    }
    if let Some(t) = &target {
        xs.push(t[0]);
        ys.push(t[1]);
    }
    let range = |v: &[f64]| {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if !lo.is_finite() {
            return (-1.0, 1.0);
        }
        let pad = ((hi - lo) * 0.15).max(0.5);
        (lo - pad, hi + pad)
    };
    let frame = Frame::new(opts, range(&xs), range(&ys));

    let mut out = String::new();
    header(&mut out, opts);
    writeln!(
        out,
        r##"<defs><marker id="head" viewBox="0 0 6 6" refX="5" refY="3" markerWidth="5" markerHeight="5" orient="auto"><path d="M0,0L6,3L0,6z" fill="#999999"/></marker></defs>"##
    )
    .unwrap();
    for (lo, hi, horizontal) in [(frame.x0, frame.x1, true), (frame.y0, frame.y1, false)] {
        let step = nice_step(hi - lo, 5);
        let mut v = (lo / step).ceil() * step;
        while v <= hi {
            let label = format!("{}", (v / step).round() * step);
            if horizontal {
                frame.xtick(&mut out, v, &label);
            } else {
                frame.ytick(&mut out, v, &label);
            }
            v += step;
        }
    }
    frame.axes(&mut out, "θ", "φ");

    const GRID: usize = 17;
    let cell = (frame.right - frame.left).min(frame.bottom - frame.top) / GRID as f64;
    for i in 0..GRID {
        for j in 0..GRID {
            let x = frame.x0 + (i as f64 + 0.5) / GRID as f64 * (frame.x1 - frame.x0);
            let y = frame.y0 + (j as f64 + 0.5) / GRID as f64 * (frame.y1 - frame.y0);
            let Ok(f) = viopt_core::evaluate(problem.field(), &[x, y]) else { continue };
            // Screen direction of −F; the y axis points down.
            let (dx, dy) = (-f[0] / (frame.x1 - frame.x0), f[1] / (frame.y1 - frame.y0));
            let n = dx.hypot(dy);
            if !(n > 0.0 && n.is_finite()) {
                continue;
            }
            let (px, py) = (frame.px(x), frame.py(y));
            let len = 0.4 * cell;
            writeln!(
                out,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999999" marker-end="url(#head)"/>"##,
                px - 0.5 * len * dx / n,
                py - 0.5 * len * dy / n,
                px + 0.5 * len * dx / n,
                py + 0.5 * len * dy / n
            )
            .unwrap();
        }
    }
    if let Some(t) = &target {
        writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="black"><title>solution</title></circle>"#, frame.px(t[0]), frame.py(t[1])).unwrap();
    }
    writeln!(
        out,
        r#"<clipPath id="view"><rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/></clipPath>"#,
        frame.left,
        frame.top,
        frame.right - frame.left,
        frame.bottom - frame.top
    )
    .unwrap();
    for (i, (_, pts, _)) in paths.iter().enumerate() {
        let clipped: Vec<String> = pts
            .iter()
            .filter(|(x, y)| x.abs() < 1e6 && y.abs() < 1e6)
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y)))
            .collect();
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" clip-path="url(#view)" points="{}"/>"#,
            color(i),
            clipped.join(" ")
        )
        .unwrap();
    }
    let entries: Vec<(String, &'static str)> = paths.iter().enumerate().map(|(i, (l, _, _))| (l.clone(), color(i))).collect();
    legend(&mut out, opts, &entries);
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn emit_plane(
    problem: &ProblemInstance,
    trajectories: &[TrajectoryRecord],
    selections: &[Selection],
    path: &Path,
    opts: &PlotOptions,
) -> Result<()> {
    write(path, &render_plane(problem, trajectories, selections, opts)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use viopt_core::problems::make_bilinear_1d;

    fn rec(method: &str, eta: f64, seed: u64, iter: usize, value: f64, diverged: bool) -> ResultRecord {
        ResultRecord { method: method.into(), step_size: eta, seed, iter, metric: "distance".into(), value, diverged, eval_count: 0 }
    }

    fn curve(method: &str, rate: f64) -> Vec<ResultRecord> {
        (0..=10).map(|t| rec(method, 0.1, 1, t * 10, rate.powi(t as i32), false)).collect()
    }

    #[test]
    fn one_polyline_per_method() {
        let mut records = curve("extragradient", 0.5);
        records.extend(curve("past_extragradient", 0.7));
        let svg = render_plot(&records, &PlotOptions::default()).unwrap();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("extragradient (η=1e-1)"));
        assert!(svg.contains(">1e0<"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let records = curve("avg_sgd", 0.9);
        let opts = PlotOptions { title: Some("a < b & c".into()), ..PlotOptions::default() };
        let a = render_plot(&records, &opts).unwrap();
        assert_eq!(a, render_plot(&records, &opts).unwrap());
        assert!(a.contains("a &lt; b &amp; c"));
    }

    #[test]
    fn diverged_series_stop_with_a_marker() {
        let mut records: Vec<_> = (0..5).map(|t| rec("sim_sgd", 0.3, 1, t * 10, 2f64.powi(t as i32), false)).collect();
        records.push(rec("sim_sgd", 0.3, 1, 47, f64::INFINITY, true));
        let svg = render_plot(&records, &PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert_eq!(svg.matches("<title>diverged</title>").count(), 1);
        assert!(svg.contains("no convergent setting"));
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }

    #[test]
    fn empty_records_are_rejected() {
        assert!(render_plot(&[], &PlotOptions::default()).is_err());
    }

    #[test]
    fn plane_plot_has_paths_and_arrows() {
        let p = make_bilinear_1d();
        let traj: Vec<TrajectoryRecord> = (0..20)
            .map(|t| {
                let a = t as f64 * 0.3;
                TrajectoryRecord { method: "extragradient".into(), step_size: 0.1, seed: 1, iter: t, theta: a.cos(), phi: a.sin() }
            })
            .collect();
        let sel = vec![Selection { method: "extragradient".into(), step_size: 0.1, mean_final: 0.0, convergent: true }];
        let svg = render_plane(&p, &traj, &sel, &PlotOptions::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
        // The origin is a zero of F; every other grid point gets an arrow.
        assert!(svg.matches("marker-end").count() >= 17 * 17 - 1);
        assert_eq!(svg, render_plane(&p, &traj, &sel, &PlotOptions::default()).unwrap());
    }
}
