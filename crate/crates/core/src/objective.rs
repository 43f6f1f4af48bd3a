//! Goodness-of-fit measures and the calibration objective.
//!
//! The spacing RMSPE is `sqrt(sum (sim - obs)^2 / sum obs^2)`. Over several
//! periods the residual and denominator sums are pooled before the square
//! root, which weights periods by their length. Each collided period adds a
//! fixed penalty.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{simulate_period, FollowerLaw, SimConfig, SimResult};
use crate::trajectory::CarFollowingPeriod;

pub const DEFAULT_PENALTY: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Residual and denominator sums pooled across periods.
    #[default]
    Pooled,
    /// Arithmetic mean of per-period RMSPE.
    MeanOfPeriods,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveConfig {
    pub penalty: f64,
    pub aggregation: Aggregation,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self { penalty: DEFAULT_PENALTY, aggregation: Aggregation::Pooled }
    }
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(Error::Empty);
    }
    Ok(())
}

/// Root mean square error.
pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / x.len() as f64).sqrt())
}

/// Residual and observation energy, the two sums behind an RMSPE.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RmspeSums {
    pub residual: f64,
    pub observed: f64,
}

impl RmspeSums {
    pub fn of(sim: &[f64], obs: &[f64]) -> Result<Self> {
        check_lengths(sim, obs)?;
        let mut s = RmspeSums::default();
        for (a, b) in sim.iter().zip(obs) {
            s.residual += (a - b) * (a - b);
            s.observed += b * b;
        }
        Ok(s)
    }

    pub fn add(self, other: Self) -> Self {
        RmspeSums { residual: self.residual + other.residual, observed: self.observed + other.observed }
    }

    pub fn rmspe(&self) -> Result<f64> {
        if self.observed <= 0.0 {
            return Err(Error::ZeroObservation);
        }
        Ok((self.residual / self.observed).sqrt())
    }
}

/// Root mean square percentage error of `sim` against `obs`.
pub fn rmspe(sim: &[f64], obs: &[f64]) -> Result<f64> {
    RmspeSums::of(sim, obs)?.rmspe()
}

/// Fit of one law over a set of periods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rmspe_spacing: f64,
    pub rmspe_speed: f64,
    pub rmse_spacing: f64,
    pub collided_count: usize,
    pub n_periods: usize,
}

impl ErrorReport {
    /// Objective value: spacing RMSPE plus the collision penalty.
    pub fn fitness(&self, cfg: &ObjectiveConfig) -> f64 {
        self.rmspe_spacing + cfg.penalty * self.collided_count as f64
    }
}

/// Simulates every period (in parallel, results kept in period order).
pub fn simulate_all<L: FollowerLaw + Sync + ?Sized>(
    law: &L,
    periods: &[CarFollowingPeriod],
    sim: &SimConfig,
) -> Result<Vec<SimResult>> {
    periods.par_iter().map(|p| simulate_period(law, p, sim)).collect()
}

fn aggregate(parts: &[RmspeSums], aggregation: Aggregation) -> Result<f64> {
    match aggregation {
        Aggregation::Pooled => parts.iter().fold(RmspeSums::default(), |acc, s| acc.add(*s)).rmspe(),
        Aggregation::MeanOfPeriods => {
            let mut total = 0.0;
            for s in parts {
                total += s.rmspe()?;
            }
            Ok(total / parts.len() as f64)
        }
    }
}

/// Builds the error report from finished simulations. Sums run in period
/// order so the result does not depend on scheduling.
pub fn report_from_results(
    periods: &[CarFollowingPeriod],
    results: &[SimResult],
    aggregation: Aggregation,
) -> Result<ErrorReport> {
    if periods.is_empty() {
        return Err(Error::Empty);
    }
    let mut spacing = Vec::with_capacity(periods.len());
    let mut speed = Vec::with_capacity(periods.len());
    let mut sq = 0.0;
    let mut count = 0usize;
    for (p, r) in periods.iter().zip(results) {
        let gaps = p.gaps();
        spacing.push(RmspeSums::of(&r.sim_gap, &gaps)?);
        speed.push(RmspeSums::of(&r.sim_fv_speed, &p.fv_speeds())?);
        sq += r.sim_gap.iter().zip(&gaps).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        count += gaps.len();
    }
    Ok(ErrorReport {
        rmspe_spacing: aggregate(&spacing, aggregation)?,
        rmspe_speed: aggregate(&speed, aggregation)?,
        rmse_spacing: (sq / count as f64).sqrt(),
        collided_count: results.iter().filter(|r| r.collided).count(),
        n_periods: periods.len(),
    })
}

pub fn error_report<L: FollowerLaw + Sync + ?Sized>(
    law: &L,
    periods: &[CarFollowingPeriod],
    sim: &SimConfig,
    obj: &ObjectiveConfig,
) -> Result<ErrorReport> {
    if periods.is_empty() {
        return Err(Error::Empty);
    }
    let results = simulate_all(law, periods, sim)?;
    report_from_results(periods, &results, obj.aggregation)
}

/// Calibration objective: spacing RMSPE over all periods plus
/// `penalty * (number of collided periods)`.
pub fn pooled_objective<L: FollowerLaw + Sync + ?Sized>(
    law: &L,
    periods: &[CarFollowingPeriod],
    sim: &SimConfig,
    obj: &ObjectiveConfig,
) -> Result<f64> {
    Ok(error_report(law, periods, sim, obj)?.fitness(obj))
}

/// Empirical c.d.f. with a strict inequality: the fraction of errors below `e`.
pub fn error_cdf(errors: &[f64], e: f64) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    errors.iter().filter(|&&x| x < e).count() as f64 / errors.len() as f64
}

/// Step curve of the c.d.f.: for every distinct error value, the level just
/// before and just after the jump. The last point is always 1.
pub fn cdf_curve(errors: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted: Vec<f64> = errors.iter().copied().filter(|e| e.is_finite()).collect();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let n = errors.len() as f64;
    let mut out = Vec::with_capacity(sorted.len() * 2);
    for e in sorted {
        let below = error_cdf(errors, e);
        let at_or_below = errors.iter().filter(|&&x| x <= e).count() as f64 / n;
        out.push((e, below));
        out.push((e, at_or_below));
    }
    out
}

/// Two-column `e,F` CSV.
pub fn write_cdf_csv<W: Write>(out: W, curve: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["e", "F"])?;
    for (e, f) in curve {
        w.write_record([e.to_string(), f.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<cdf>", e))?;
    Ok(())
}
