//! Leader–follower trajectory records: CSV ingestion, 10 Hz resampling and
//! extraction of car-following periods.
//!
//! `gap` is always the net spacing (follower front bumper to leader rear
//! bumper). The front-to-front space headway is `gap + lv_length`.

use std::collections::HashSet;
use std::fs;
use std::io::{Read, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling interval of every period after resampling.
pub const SAMPLE_DT: f64 = 0.1;

/// Leader length assumed when the file does not provide one.
pub const DEFAULT_LV_LENGTH: f64 = 5.0;

/// Tolerance used when matching timestamps against the 0.1 s grid.
const GRID_EPS: f64 = 1e-6;

pub const CSV_HEADER: [&str; 7] = [
    "t_s",
    "fv_speed_mps",
    "gap_m",
    "lv_speed_mps",
    "lv_id",
    "lateral_m",
    "lv_length_m",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub fv_speed: f64,
    pub gap: f64,
    pub lv_speed: f64,
    pub lv_id: i64,
    pub lateral_offset: f64,
    /// Optional per-row leader length; only the first row of a period is used.
    #[serde(default)]
    pub lv_length: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionCriteria {
    pub max_gap: f64,
    pub max_lateral: f64,
    pub min_duration: f64,
    pub max_dropout: f64,
}

impl Default for ExtractionCriteria {
    fn default() -> Self {
        Self { max_gap: 120.0, max_lateral: 2.5, min_duration: 15.0, max_dropout: 0.0 }
    }
}

impl ExtractionCriteria {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_gap > 0.0
            && self.max_lateral > 0.0
            && self.min_duration > 0.0
            && self.max_dropout >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("extraction criteria out of range: {self:?}")))
        }
    }

    fn accepts(&self, s: &TrajectorySample) -> bool {
        s.lv_id > 0 && s.gap > 0.0 && s.gap < self.max_gap && s.lateral_offset.abs() < self.max_lateral
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarFollowingPeriod {
    pub driver_id: String,
    pub period_id: String,
    pub samples: Vec<TrajectorySample>,
    pub lv_length: f64,
}

/// Sidecar manifest written next to each period CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodManifest {
    pub driver_id: String,
    pub period_id: String,
    pub t_start: f64,
    pub duration_s: f64,
    pub lv_id: i64,
    pub lv_length_m: f64,
}

impl CarFollowingPeriod {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.gap).collect()
    }

    pub fn fv_speeds(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.fv_speed).collect()
    }

    pub fn lv_speeds(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.lv_speed).collect()
    }

    pub fn manifest(&self) -> PeriodManifest {
        PeriodManifest {
            driver_id: self.driver_id.clone(),
            period_id: self.period_id.clone(),
            t_start: self.samples.first().map_or(0.0, |s| s.t),
            duration_s: self.duration(),
            lv_id: self.samples.first().map_or(0, |s| s.lv_id),
            lv_length_m: self.lv_length,
        }
    }

    /// Checks every period invariant against `criteria`. Returns a description
    /// of the first violation.
    pub fn check(&self, criteria: &ExtractionCriteria) -> std::result::Result<(), String> {
        let first = self.samples.first().ok_or("empty period")?;
        if self.duration() <= criteria.min_duration {
            return Err(format!("duration {} <= {}", self.duration(), criteria.min_duration));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !criteria.accepts(s) {
                return Err(format!("sample {i} violates the filter: {s:?}"));
            }
            if s.lv_id != first.lv_id {
                return Err(format!("lv_id changes at sample {i}"));
            }
            if i > 0 {
                let dt = s.t - self.samples[i - 1].t;
                if (dt - SAMPLE_DT).abs() > GRID_EPS {
                    return Err(format!("spacing {dt} at sample {i} is not 0.1 s"));
                }
            }
        }
        Ok(())
    }

    /// Follower and leader-rear positions used for replay: the follower starts
    /// at 0 and is integrated forward from its recorded speed, the leader sits
    /// `gap` ahead of it.
    pub fn reconstruct_positions(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.samples.len();
        let mut fv = Vec::with_capacity(n);
        let mut x = 0.0;
        for (i, s) in self.samples.iter().enumerate() {
            if i > 0 {
                let prev = &self.samples[i - 1];
                x += prev.fv_speed * (s.t - prev.t);
            }
            fv.push(x);
        }
        let lv = fv.iter().zip(&self.samples).map(|(x, s)| x + s.gap).collect();
        (fv, lv)
    }
}

/// One driver's periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverDataset {
    pub driver_id: String,
    pub periods: Vec<CarFollowingPeriod>,
}

impl DriverDataset {
    pub fn new(driver_id: impl Into<String>, periods: Vec<CarFollowingPeriod>) -> Result<Self> {
        let driver_id = driver_id.into();
        let mut ids = HashSet::new();
        for p in &periods {
            if p.driver_id != driver_id {
                return Err(Error::InvalidArgument(format!(
                    "period {} belongs to driver {}, not {driver_id}",
                    p.period_id, p.driver_id
                )));
            }
            if !ids.insert(p.period_id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate period id {}", p.period_id)));
            }
        }
        Ok(Self { driver_id, periods })
    }
}

fn parse_field(rec: &csv::StringRecord, idx: usize, name: &str, line: u64) -> Result<f64> {
    let raw = rec
        .get(idx)
        .ok_or_else(|| Error::MalformedRow { line, msg: format!("missing column {name}") })?;
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::MalformedRow {
        line,
        msg: format!("bad value '{raw}' for {name}"),
    })
}

/// Reads a trajectory CSV (`t_s,fv_speed_mps,gap_m,lv_speed_mps,lv_id,lateral_m[,lv_length_m]`).
pub fn load_trajectory<R: Read>(source: R) -> Result<Vec<TrajectorySample>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).flexible(true).from_reader(source);
    let headers = reader.headers()?.clone();
    for (i, want) in CSV_HEADER[..6].iter().enumerate() {
        if headers.get(i) != Some(*want) {
            return Err(Error::MalformedRow {
                line: 1,
                msg: format!("expected header column {} to be '{want}'", i + 1),
            });
        }
    }
    let has_length = headers.get(6) == Some(CSV_HEADER[6]);

    let mut out: Vec<TrajectorySample> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let expected = if has_length { 7 } else { 6 };
        if rec.len() != expected {
            return Err(Error::MalformedRow {
                line,
                msg: format!("expected {expected} fields, found {}", rec.len()),
            });
        }
        let t = parse_field(&rec, 0, "t_s", line)?;
        let fv_speed = parse_field(&rec, 1, "fv_speed_mps", line)?;
        let gap = parse_field(&rec, 2, "gap_m", line)?;
        let lv_speed = parse_field(&rec, 3, "lv_speed_mps", line)?;
        let lv_id_raw = rec.get(4).unwrap_or("");
        let lv_id = lv_id_raw.parse::<i64>().map_err(|_| Error::MalformedRow {
            line,
            msg: format!("bad value '{lv_id_raw}' for lv_id"),
        })?;
        let lateral_offset = parse_field(&rec, 5, "lateral_m", line)?;
        let lv_length = if has_length && !rec.get(6).unwrap_or("").is_empty() {
            Some(parse_field(&rec, 6, "lv_length_m", line)?)
        } else {
            None
        };
        for v in [fv_speed, lv_speed] {
            if v < 0.0 {
                return Err(Error::NegativeSpeed { line, value: v });
            }
        }
        if let Some(prev) = out.last() {
            if t <= prev.t {
                return Err(Error::NonMonotonicTime { line, t, prev: prev.t });
            }
        }
        out.push(TrajectorySample { t, fv_speed, gap, lv_speed, lv_id, lateral_offset, lv_length });
    }
    Ok(out)
}

pub fn load_trajectory_file(path: &Path) -> Result<Vec<TrajectorySample>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_trajectory(std::io::BufReader::new(f))
}

/// Writes samples in the trajectory CSV schema. `lv_length` fills the
/// optional last column when given.
pub fn write_trajectory<W: Write>(out: W, samples: &[TrajectorySample], lv_length: Option<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let cols = if lv_length.is_some() { 7 } else { 6 };
    w.write_record(&CSV_HEADER[..cols])?;
    for s in samples {
        let mut row = vec![
            s.t.to_string(),
            s.fv_speed.to_string(),
            s.gap.to_string(),
            s.lv_speed.to_string(),
            s.lv_id.to_string(),
            s.lateral_offset.to_string(),
        ];
        if let Some(l) = lv_length {
            row.push(l.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

fn lerp(a: f64, b: f64, w: f64) -> f64 {
    a + w * (b - a)
}

/// Resamples onto the grid `t_first, t_first + 0.1, …` by linear
/// interpolation. `lv_id` comes from the nearest earlier input sample.
pub fn resample_10hz(samples: &[TrajectorySample]) -> Result<Vec<TrajectorySample>> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    let t0 = samples[0].t;
    let t_end = samples[samples.len() - 1].t;
    let steps = ((t_end - t0) / SAMPLE_DT + GRID_EPS).floor() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut seg = 0;
    for k in 0..=steps {
        let t = t0 + k as f64 / 10.0;
        while seg + 2 < samples.len() && samples[seg + 1].t <= t + GRID_EPS {
            seg += 1;
        }
        let (a, b) = (&samples[seg], &samples[seg + 1]);
        let sample = if (t - a.t).abs() <= GRID_EPS {
            *a
        } else if (t - b.t).abs() <= GRID_EPS {
            *b
        } else {
            let w = (t - a.t) / (b.t - a.t);
            TrajectorySample {
                t,
                fv_speed: lerp(a.fv_speed, b.fv_speed, w),
                gap: lerp(a.gap, b.gap, w),
                lv_speed: lerp(a.lv_speed, b.lv_speed, w),
                lv_id: a.lv_id,
                lateral_offset: lerp(a.lateral_offset, b.lateral_offset, w),
                lv_length: a.lv_length,
            }
        };
        out.push(sample);
    }
    Ok(out)
}

/// Index ranges (into `samples`) of the runs that pass the car-following
/// filter. Ranges are disjoint and in time order.
pub fn extract_runs(samples: &[TrajectorySample], criteria: &ExtractionCriteria) -> Vec<Range<usize>> {
    // maximal runs of accepted samples sharing one lv_id
    let mut raw: Vec<(Range<usize>, i64)> = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        if !criteria.accepts(&samples[i]) {
            i += 1;
            continue;
        }
        let id = samples[i].lv_id;
        let start = i;
        while i < samples.len() && criteria.accepts(&samples[i]) && samples[i].lv_id == id {
            i += 1;
        }
        raw.push((start..i, id));
    }

    let mut merged: Vec<(Range<usize>, i64)> = Vec::new();
    for (r, id) in raw {
        if criteria.max_dropout > 0.0 {
            if let Some((last, last_id)) = merged.last_mut() {
                let dropped = r.start - last.end;
                if *last_id == id && dropped > 0 && dropped as f64 * SAMPLE_DT <= criteria.max_dropout + GRID_EPS {
                    last.end = r.end;
                    continue;
                }
            }
        }
        merged.push((r, id));
    }

    merged
        .into_iter()
        .map(|(r, _)| r)
        .filter(|r| samples[r.end - 1].t - samples[r.start].t > criteria.min_duration)
        .collect()
}

/// Extracts car-following periods. Period ids are `<prefix>_<nnn>`.
pub fn extract_periods(
    samples: &[TrajectorySample],
    criteria: &ExtractionCriteria,
    driver_id: &str,
    prefix: &str,
) -> Vec<CarFollowingPeriod> {
    extract_runs(samples, criteria)
        .into_iter()
        .enumerate()
        .map(|(n, r)| {
            let samples = samples[r].to_vec();
            let lv_length = samples[0].lv_length.unwrap_or(DEFAULT_LV_LENGTH);
            CarFollowingPeriod {
                driver_id: driver_id.to_string(),
                period_id: format!("{prefix}_{n:03}"),
                samples,
                lv_length,
            }
        })
        .collect()
}

/// Summary row for manual review of an extracted period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSummary {
    pub period_id: String,
    pub t_start: f64,
    pub duration_s: f64,
    pub lv_id: i64,
    pub min_gap: f64,
    pub max_gap: f64,
    pub min_lateral: f64,
    pub max_lateral: f64,
    pub mean_fv_speed: f64,
}

impl From<&CarFollowingPeriod> for PeriodSummary {
    fn from(p: &CarFollowingPeriod) -> Self {
        let fold = |f: fn(&TrajectorySample) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
            p.samples.iter().map(f).fold(init, pick)
        };
        let n = p.samples.len().max(1) as f64;
        PeriodSummary {
            period_id: p.period_id.clone(),
            t_start: p.samples.first().map_or(0.0, |s| s.t),
            duration_s: p.duration(),
            lv_id: p.samples.first().map_or(0, |s| s.lv_id),
            min_gap: fold(|s| s.gap, f64::INFINITY, f64::min),
            max_gap: fold(|s| s.gap, f64::NEG_INFINITY, f64::max),
            min_lateral: fold(|s| s.lateral_offset, f64::INFINITY, f64::min),
            max_lateral: fold(|s| s.lateral_offset, f64::NEG_INFINITY, f64::max),
            mean_fv_speed: p.samples.iter().map(|s| s.fv_speed).sum::<f64>() / n,
        }
    }
}

/// Writes `<dir>/<period_id>.csv` and the `<period_id>.json` manifest.
pub fn write_period(dir: &Path, period: &CarFollowingPeriod) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(format!("{}.csv", period.period_id));
    let f = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    write_trajectory(f, &period.samples, Some(period.lv_length))?;
    let json_path = dir.join(format!("{}.json", period.period_id));
    let text = serde_json::to_string_pretty(&period.manifest())?;
    fs::write(&json_path, text + "\n").map_err(|e| Error::io(&json_path, e))?;
    Ok(csv_path)
}

/// Reads a period CSV plus its manifest if present. Without a manifest the
/// driver id is the parent directory name and the period id the file stem.
pub fn load_period(csv_path: &Path) -> Result<CarFollowingPeriod> {
    let samples = load_trajectory_file(csv_path)?;
    let manifest_path = csv_path.with_extension("json");
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("period").to_string();
    let (driver_id, period_id, lv_length) = if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let m: PeriodManifest = serde_json::from_str(&text)?;
        (m.driver_id, m.period_id, m.lv_length_m)
    } else {
        let driver = csv_path
            .parent()
            .and_then(|p| p.file_name())
            .and_then(|s| s.to_str())
            .unwrap_or("driver")
            .to_string();
        let len = samples.first().and_then(|s| s.lv_length).unwrap_or(DEFAULT_LV_LENGTH);
        (driver, stem, len)
    };
    Ok(CarFollowingPeriod { driver_id, period_id, samples, lv_length })
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    v.sort();
    Ok(v)
}

/// Loads `<root>/<driver_id>/*.csv` into one dataset per driver, sorted by
/// driver id and period file name.
pub fn load_datasets(root: &Path) -> Result<Vec<DriverDataset>> {
    let mut out = Vec::new();
    for dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let driver_id = dir.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let mut periods = Vec::new();
        for f in sorted_entries(&dir)? {
            if f.extension().and_then(|e| e.to_str()) == Some("csv") {
                let mut p = load_period(&f)?;
                p.driver_id = driver_id.clone();
                periods.push(p);
            }
        }
        if !periods.is_empty() {
            out.push(DriverDataset::new(driver_id, periods)?);
        }
    }
    Ok(out)
}
