//! Report tables (CSV) and figures (SVG): parameter summaries, error
//! c.d.f.s, per-driver error bars, inter-driver matrices and
//! simulated-versus-observed overlays.

use std::fmt::Write as _;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::simulator::SimResult;
use crate::trajectory::CarFollowingPeriod;
use crate::workflow::{sample_std, CalibrationResult, ParamSummary};

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|e| Error::io("<csv>", e))
}

pub const SUMMARY_HEADER: [&str; 10] =
    ["parameter", "unit", "mean", "median", "std", "p5", "p95", "intra_driver_std", "inter_driver_std", "n"];

pub fn write_summary_csv<W: Write>(out: W, rows: &[ParamSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.unit.clone(),
            r.mean.to_string(),
            r.median.to_string(),
            r.std.to_string(),
            r.p5.to_string(),
            r.p95.to_string(),
            r.intra_driver_std.to_string(),
            r.inter_driver_std.to_string(),
            r.n.to_string(),
        ])?;
    }
    flush(w)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::MalformedRow { line: line as u64, msg: format!("bad or missing field {}", i + 1) })
}

pub fn read_summary_csv<R: Read>(source: R) -> Result<Vec<ParamSummary>> {
    let mut r = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        out.push(ParamSummary {
            name: field(&rec, 0, line)?,
            unit: field(&rec, 1, line)?,
            mean: field(&rec, 2, line)?,
            median: field(&rec, 3, line)?,
            std: field(&rec, 4, line)?,
            p5: field(&rec, 5, line)?,
            p95: field(&rec, 6, line)?,
            intra_driver_std: field(&rec, 7, line)?,
            inter_driver_std: field(&rec, 8, line)?,
            n: field(&rec, 9, line)?,
        });
    }
    Ok(out)
}

/// Reads the `e,F` file written by `objective::write_cdf_csv`.
pub fn read_cdf_csv<R: Read>(source: R) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        out.push((field(&rec, 0, i + 2)?, field(&rec, 1, i + 2)?));
    }
    Ok(out)
}

/// Square matrix with a `driver` column and one column per driver.
pub fn write_matrix_csv<W: Write>(out: W, drivers: &[String], m: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["driver".to_string()];
    header.extend(drivers.iter().cloned());
    w.write_record(&header)?;
    for (d, row) in drivers.iter().zip(m) {
        let mut rec = vec![d.clone()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    flush(w)
}

pub fn read_matrix_csv<R: Read>(source: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(source);
    let drivers: Vec<String> = r.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = (1..rec.len()).map(|j| field(&rec, j, i + 2)).collect::<Result<Vec<f64>>>()?;
        if row.len() != drivers.len() {
            return Err(Error::MalformedRow { line: (i + 2) as u64, msg: format!("{} values for {} drivers", row.len(), drivers.len()) });
        }
        rows.push(row);
    }
    if rows.len() != drivers.len() {
        return Err(Error::LengthMismatch(rows.len(), drivers.len()));
    }
    Ok((drivers, rows))
}

/// Per-driver mean and standard deviation across folds of the calibration
/// and validation spacing errors.
pub fn write_error_bars_csv<W: Write>(out: W, results: &[CalibrationResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["driver", "calibration_mean", "calibration_std", "validation_mean", "validation_std", "collisions"])?;
    for r in results {
        let cal: Vec<f64> = r.folds.iter().map(|f| f.calibration.rmspe_spacing).collect();
        let val: Vec<f64> = r.folds.iter().map(|f| f.validation.rmspe_spacing).collect();
        w.write_record([
            r.driver_id.clone(),
            r.averages.calibration_rmspe.to_string(),
            sample_std(&cal).to_string(),
            r.averages.validation_rmspe_spacing.to_string(),
            sample_std(&val).to_string(),
            r.averages.validation_collisions.to_string(),
        ])?;
    }
    flush(w)
}

/// Calibration and validation spacing errors, one per driver and fold.
pub fn fold_errors(results: &[CalibrationResult]) -> (Vec<f64>, Vec<f64>) {
    let folds = results.iter().flat_map(|r| &r.folds);
    let cal = folds.clone().map(|f| f.calibration.rmspe_spacing).collect();
    let val = folds.map(|f| f.validation.rmspe_spacing).collect();
    (cal, val)
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Linear map from a data range onto a pixel range.
#[derive(Debug, Clone, Copy)]
struct Axis {
    lo: f64,
    hi: f64,
    px0: f64,
    px1: f64,
}

impl Axis {
    fn new(lo: f64, hi: f64, px0: f64, px1: f64) -> Self {
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        Self { lo, hi, px0, px1 }
    }

    fn map(&self, x: f64) -> f64 {
        self.px0 + (x - self.lo) / (self.hi - self.lo) * (self.px1 - self.px0)
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn polyline(svg: &mut String, pts: &[(f64, f64)], x: Axis, y: Axis, color: &str, dash: bool) {
    let path: Vec<String> = pts.iter().map(|&(a, b)| format!("{:.2},{:.2}", x.map(a), y.map(b))).collect();
    let dash = if dash { r#" stroke-dasharray="6 3""# } else { "" };
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
        path.join(" ")
    );
}

fn frame(svg: &mut String, x: Axis, y: Axis, title: &str, xlabel: &str, ylabel: &str) {
    let (l, r, t, b) = (x.px0, x.px1, y.px1, y.px0);
    let _ = writeln!(svg, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#, (l + r) / 2.0, t - 8.0, escape(title));
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, (l + r) / 2.0, b + 36.0, escape(xlabel));
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 {} {})">{}</text>"#,
        l - 40.0,
        (t + b) / 2.0,
        l - 40.0,
        (t + b) / 2.0,
        escape(ylabel)
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x.lo + f * (x.hi - x.lo), y.lo + f * (y.hi - y.lo));
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{}" text-anchor="middle" font-size="10">{}</text>"#, x.map(xv), b + 16.0, tick(xv));
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end" font-size="10">{}</text>"#, l - 6.0, y.map(yv) + 3.0, tick(yv));
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 100.0 || v == 0.0 {
        format!("{v:.0}")
    } else if v.abs() >= 1.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn legend(svg: &mut String, labels: &[&str], x: f64, y: f64) {
    for (i, label) in labels.iter().enumerate() {
        let yy = y + 16.0 * i as f64;
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(svg, r#"<line x1="{x}" y1="{yy}" x2="{}" y2="{yy}" stroke="{c}" stroke-width="2"/>"#, x + 18.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11">{}</text>"#, x + 24.0, yy + 4.0, escape(label));
    }
}

/// Step plot of one or more c.d.f. curves as produced by `cdf_curve`.
pub fn svg_cdf_plot(series: &[(&str, Vec<(f64, f64)>)], title: &str, xlabel: &str) -> String {
    let (lo, hi) = range(series.iter().flat_map(|(_, c)| c.iter().map(|p| p.0)));
    let (lo, hi) = if lo.is_finite() { (lo.min(0.0), hi) } else { (0.0, 1.0) };
    let x = Axis::new(lo, hi, MARGIN, W - 16.0);
    let y = Axis::new(0.0, 1.0, H - MARGIN, 32.0);
    let mut svg = open(W, H);
    frame(&mut svg, x, y, title, xlabel, "F");
    for (i, (_, curve)) in series.iter().enumerate() {
        let mut pts = vec![(lo, 0.0)];
        pts.extend(curve.iter().copied());
        if let Some(&(e, _)) = curve.last() {
            pts.push((hi.max(e), 1.0));
        }
        polyline(&mut svg, &pts, x, y, COLORS[i % COLORS.len()], false);
    }
    let labels: Vec<&str> = series.iter().map(|(l, _)| *l).collect();
    legend(&mut svg, &labels, W - 180.0, H - MARGIN - 16.0 * labels.len() as f64);
    svg.push_str("</svg>\n");
    svg
}

/// Two stacked panels, gap and follower speed, with simulated (solid) and
/// observed (dashed) traces. A collision is marked by a vertical line and
/// its time.
pub fn svg_overlay(period: &CarFollowingPeriod, result: &SimResult, title: &str) -> String {
    let panel_h = 220.0;
    let height = 2.0 * panel_h + 40.0;
    let mut svg = open(W, height);
    let t = &result.t;
    let (t0, t1) = range(t.iter().copied());
    let panels: [(&str, Vec<f64>, Vec<f64>); 2] = [
        ("gap (m)", result.sim_gap.clone(), period.gaps()),
        ("follower speed (m/s)", result.sim_fv_speed.clone(), period.fv_speeds()),
    ];
    for (k, (label, sim, obs)) in panels.iter().enumerate() {
        let top = 40.0 + k as f64 * panel_h;
        let (lo, hi) = range(sim.iter().chain(obs).copied());
        let x = Axis::new(t0, t1, MARGIN, W - 16.0);
        let y = Axis::new(lo.min(0.0), hi, top + panel_h - 48.0, top);
        let heading = if k == 0 { title } else { "" };
        frame(&mut svg, x, y, heading, if k == 1 { "time (s)" } else { "" }, label);
        let s: Vec<(f64, f64)> = t.iter().copied().zip(sim.iter().copied()).collect();
        let o: Vec<(f64, f64)> = t.iter().copied().zip(obs.iter().copied()).collect();
        polyline(&mut svg, &s, x, y, COLORS[0], false);
        polyline(&mut svg, &o, x, y, COLORS[1], true);
        if let Some(tc) = result.collision_time {
            let px = x.map(tc);
            let _ = writeln!(
                svg,
                r#"<line class="collision" x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black" stroke-dasharray="2 2"/>"#,
                y.px1,
                y.px0
            );
            if k == 0 {
                let _ = writeln!(svg, r#"<text x="{:.2}" y="{}" font-size="11">collision t = {tc:.1} s</text>"#, px + 4.0, y.px1 + 14.0);
            }
        }
    }
    legend(&mut svg, &["simulated", "observed"], W - 140.0, 52.0);
    svg.push_str("</svg>\n");
    svg
}
