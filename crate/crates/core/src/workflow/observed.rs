//! IDM parameters read directly off driving data, one regime per parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::KMH_TO_MPS;
use crate::trajectory::{TrajectorySample, SAMPLE_DT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelStatistic {
    Max,
    /// 99.5th percentile.
    Percentile995,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObservedConfig {
    /// Gaps above this (or no leader at all) count as free driving, m.
    pub free_gap: f64,
    /// Steady following: |v_lv - v_fv| below this, m/s.
    pub steady_dv: f64,
    /// Headway samples need at least this follower speed, m/s.
    pub headway_min_speed: f64,
    /// Standing traffic: follower speed below this, m/s.
    pub standstill_speed: f64,
    /// Moving-average window applied to speed before differentiating, s.
    pub smoothing_window: f64,
    pub accel_statistic: AccelStatistic,
}

impl Default for ObservedConfig {
    fn default() -> Self {
        Self {
            free_gap: 120.0,
            steady_dv: 1.0,
            headway_min_speed: 1.0,
            standstill_speed: 1.0,
            smoothing_window: 0.5,
            accel_statistic: AccelStatistic::Max,
        }
    }
}

/// Number of samples behind each estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObservedCounts {
    pub free: usize,
    pub steady: usize,
    pub standstill: usize,
    pub following: usize,
}

/// IDM parameters in the calibration units (km/h for desired speed). A
/// `None` means the data had no sample of the relevant regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservedIdmParams {
    pub a_max: Option<f64>,
    pub v_des: Option<f64>,
    pub beta: f64,
    pub b_comf: Option<f64>,
    pub s_jam: Option<f64>,
    pub t_des: Option<f64>,
    pub counts: ObservedCounts,
}

/// Centred moving average over `window` samples, shortened at the ends.
pub fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..x.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(x.len());
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// Central differences, one-sided at the ends.
pub fn differentiate(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (v[b] - v[a]) / ((b - a) as f64 * dt)
        })
        .collect()
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Linear-interpolation percentile, `p` in [0, 100].
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(s[lo] + (s[hi] - s[lo]) * (pos - lo as f64))
}

fn extreme(values: &[f64], stat: AccelStatistic) -> Option<f64> {
    match stat {
        AccelStatistic::Max => values.iter().copied().reduce(f64::max),
        AccelStatistic::Percentile995 => percentile(values, 99.5),
    }
}

/// Estimates IDM parameters from `segments`, each a contiguous 10 Hz trace
/// (a whole drive or one car-following period).
///
/// * desired speed: mean follower speed while free (no leader or gap above
///   `free_gap`)
/// * desired headway: mean `gap / v_fv` while following with
///   `|v_lv - v_fv| < steady_dv` and `v_fv >= headway_min_speed`
/// * standstill gap: mean gap while following with `v_fv < standstill_speed`
/// * maximum acceleration and comfortable deceleration: extremes of the
///   smoothed, differentiated follower speed while following
/// * beta: 4
pub fn estimate_observed_idm(segments: &[Vec<TrajectorySample>], cfg: &ObservedConfig) -> Result<ObservedIdmParams> {
    if !(cfg.smoothing_window >= 0.0) {
        return Err(Error::InvalidArgument("smoothing window must be >= 0".into()));
    }
    let window = ((cfg.smoothing_window / SAMPLE_DT).round() as usize).max(1);
    let mut free = Vec::new();
    let mut headways = Vec::new();
    let mut standstill = Vec::new();
    let mut ups = Vec::new();
    let mut downs = Vec::new();
    let mut following = 0;

    for seg in segments {
        let speeds: Vec<f64> = seg.iter().map(|s| s.fv_speed).collect();
        let accel = differentiate(&moving_average(&speeds, window), SAMPLE_DT);
        for (s, a) in seg.iter().zip(accel) {
            let has_leader = s.lv_id > 0 && s.gap > 0.0;
            if !has_leader || s.gap > cfg.free_gap {
                free.push(s.fv_speed);
                continue;
            }
            following += 1;
            if a >= 0.0 {
                ups.push(a);
            } else {
                downs.push(-a);
            }
            if s.fv_speed < cfg.standstill_speed {
                standstill.push(s.gap);
            }
            if s.fv_speed >= cfg.headway_min_speed && (s.lv_speed - s.fv_speed).abs() < cfg.steady_dv {
                headways.push(s.gap / s.fv_speed);
            }
        }
    }

    Ok(ObservedIdmParams {
        a_max: extreme(&ups, cfg.accel_statistic),
        v_des: mean(&free).map(|v| v / KMH_TO_MPS),
        beta: 4.0,
        b_comf: extreme(&downs, cfg.accel_statistic),
        s_jam: mean(&standstill),
        t_des: mean(&headways),
        counts: ObservedCounts {
            free: free.len(),
            steady: headways.len(),
            standstill: standstill.len(),
            following,
        },
    })
}
