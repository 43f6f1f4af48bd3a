//! Synthetic trajectories: leader speed profiles, model-generated followers
//! and recovery of known parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::calibrate_periods_with_progress;
use crate::error::{Error, Result};
use crate::ga::{GaConfig, GaResult, GenerationStats};
use crate::models::{Model, ModelParams};
use crate::objective::{error_report, ErrorReport, ObjectiveConfig};
use crate::simulator::{simulate_period, FollowerLaw, SimConfig};
use crate::trajectory::{CarFollowingPeriod, TrajectorySample, DEFAULT_LV_LENGTH, SAMPLE_DT};

/// Leader speeds at 10 Hz from `(duration_s, accel)` segments, starting at
/// `v0` and never dropping below zero.
pub fn piecewise_profile(v0: f64, segments: &[(f64, f64)]) -> Vec<f64> {
    let mut v = v0;
    let mut out = vec![v];
    for &(duration, accel) in segments {
        let steps = (duration / SAMPLE_DT).round() as usize;
        for _ in 0..steps {
            v = (v + accel * SAMPLE_DT).max(0.0);
            out.push(v);
        }
    }
    out
}

/// The 60 s reference leader: cruise, two speed-ups, two slow-downs and a
/// final recovery between 8 and 23 m/s.
pub fn varied_lv_profile() -> Vec<f64> {
    let mut v = piecewise_profile(
        15.0,
        &[(10.0, 0.0), (8.0, 1.0), (7.0, 0.0), (8.0, -1.5), (7.0, 0.0), (6.0, 1.5), (6.0, -2.0), (8.0, 0.75)],
    );
    v.truncate(600);
    v
}

/// Random leader profile of `n` samples: 3-8 s segments of constant
/// acceleration in [-2, 1.5] m/s², speed kept inside [0, `v_max`].
pub fn random_lv_profile<R: Rng>(rng: &mut R, n: usize, v0: f64, v_max: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut v = v0;
    while out.len() < n {
        let steps = (rng.random_range(3.0..8.0) / SAMPLE_DT) as usize;
        let accel: f64 = rng.random_range(-2.0..1.5);
        for _ in 0..steps {
            if out.len() == n {
                break;
            }
            out.push(v);
            v = (v + accel * SAMPLE_DT).clamp(0.0, v_max);
        }
    }
    out
}

/// A period whose leader drives `lv_speeds` and whose recorded follower
/// copies the leader at a constant gap. Only the leader matters: it is the
/// input to a model-generated follower.
pub fn seed_period(driver_id: &str, period_id: &str, lv_speeds: &[f64], initial_gap: f64) -> CarFollowingPeriod {
    let samples = lv_speeds
        .iter()
        .enumerate()
        .map(|(k, &v)| TrajectorySample {
            t: k as f64 * SAMPLE_DT,
            fv_speed: v,
            gap: initial_gap,
            lv_speed: v,
            lv_id: 1,
            lateral_offset: 0.0,
            lv_length: Some(DEFAULT_LV_LENGTH),
        })
        .collect();
    CarFollowingPeriod {
        driver_id: driver_id.to_string(),
        period_id: period_id.to_string(),
        samples,
        lv_length: DEFAULT_LV_LENGTH,
    }
}

/// Replaces the follower of `seed` with the one `law` produces. Fails if the
/// generated follower collides or the law breaks down.
pub fn synthesize_period<L: FollowerLaw + ?Sized>(
    law: &L,
    seed: &CarFollowingPeriod,
    sim: &SimConfig,
) -> Result<CarFollowingPeriod> {
    let r = simulate_period(law, seed, sim)?;
    if r.collided {
        return Err(Error::InvalidArgument(format!(
            "generating law collided in period {} at t = {:?}",
            seed.period_id, r.collision_time
        )));
    }
    let mut out = seed.clone();
    for (s, (v, g)) in out.samples.iter_mut().zip(r.sim_fv_speed.iter().zip(&r.sim_gap)) {
        s.fv_speed = *v;
        s.gap = *g;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticReport {
    pub model: Model,
    pub true_params: ModelParams,
    pub recovered_params: ModelParams,
    pub rmspe: f64,
    pub report: ErrorReport,
    pub ga: GaResult,
}

/// Generates a follower with `true_params` behind the leader of
/// `seed_period`, calibrates the same model on it and reports what came
/// back. With `collapse_bounds` the search box shrinks to the true point.
pub fn synthetic_verify(
    true_params: &ModelParams,
    seed_period: &CarFollowingPeriod,
    ga: &GaConfig,
    sim: &SimConfig,
    obj: &ObjectiveConfig,
    collapse_bounds: bool,
) -> Result<SyntheticReport> {
    synthetic_verify_with_progress(true_params, seed_period, ga, sim, obj, collapse_bounds, &mut |_, _| {})
}

pub fn synthetic_verify_with_progress(
    true_params: &ModelParams,
    seed_period: &CarFollowingPeriod,
    ga: &GaConfig,
    sim: &SimConfig,
    obj: &ObjectiveConfig,
    collapse_bounds: bool,
    progress: &mut dyn FnMut(usize, &GenerationStats),
) -> Result<SyntheticReport> {
    true_params.check_bounds()?;
    let model = true_params.model();
    let data = vec![synthesize_period(true_params, seed_period, sim)?];
    let bounds = if collapse_bounds {
        true_params.genome().iter().map(|&x| (x, x)).collect()
    } else {
        model.bounds()
    };
    let (recovered, result) = calibrate_periods_with_progress(model, &bounds, &data, ga, sim, obj, progress)?;
    let report = error_report(&recovered, &data, sim, obj)?;
    Ok(SyntheticReport {
        model,
        true_params: *true_params,
        recovered_params: recovered,
        rmspe: report.rmspe_spacing,
        report,
        ga: result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::GhrParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_profile_shape() {
        let v = varied_lv_profile();
        assert_eq!(v.len(), 600);
        assert_eq!(v[0], 15.0);
        let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        assert!((lo - 8.0).abs() < 1e-9 && (hi - 23.0).abs() < 1e-9, "{lo} {hi}");
    }

    #[test]
    fn profile_clamps_at_zero() {
        let v = piecewise_profile(1.0, &[(2.0, -1.0)]);
        assert_eq!(v.len(), 21);
        assert_eq!(*v.last().unwrap(), 0.0);
    }

    #[test]
    fn random_profile_bounds() {
        let v = random_lv_profile(&mut ChaCha8Rng::seed_from_u64(4), 900, 12.0, 25.0);
        assert_eq!(v.len(), 900);
        assert!(v.iter().all(|x| (0.0..=25.0).contains(x)));
    }

    #[test]
    fn seed_period_replays_its_leader() {
        let p = seed_period("d", "p", &varied_lv_profile(), 30.0);
        let (_, lv) = p.reconstruct_positions();
        let mut x = 30.0;
        for (k, s) in p.samples.iter().enumerate() {
            assert!((lv[k] - x).abs() < 1e-9);
            x += s.lv_speed * SAMPLE_DT;
        }
    }

    #[test]
    fn synthesized_period_is_reproduced_by_its_generator() {
        let law = ModelParams::Ghr(GhrParams { alpha: 1.0, beta: 1.0, gamma: 1.0, tau: 1.0 });
        let seed = seed_period("d", "p", &varied_lv_profile(), 25.0);
        let sim = SimConfig::default();
        let syn = synthesize_period(&law, &seed, &sim).unwrap();
        let again = simulate_period(&law, &syn, &sim).unwrap();
        for (a, s) in again.sim_gap.iter().zip(&syn.samples) {
            assert!((a - s.gap).abs() < 1e-9);
        }
    }

    #[test]
    fn collapsed_bounds_give_zero_error() {
        let ga = GaConfig { pop_size: 4, max_generations: 3, n_restarts: 1, ..Default::default() };
        let seed = seed_period("d", "p", &varied_lv_profile(), 25.0);
        for model in Model::ALL {
            let truth = ModelParams::median(model);
            let r = synthetic_verify(&truth, &seed, &ga, &SimConfig::default(), &ObjectiveConfig::default(), true)
                .unwrap();
            assert_eq!(r.recovered_params, truth);
            assert!(r.rmspe < 1e-12, "{model}: {}", r.rmspe);
        }
    }
}
