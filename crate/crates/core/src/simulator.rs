//! Forward-Euler replay: a modelled follower drives behind the recorded
//! leader of a period.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{
    fvd_accel, ghr_accel, gipps_speed, idm_accel, w99_accel, ModelError, ModelInput, ModelParams, Regime,
};
use crate::trajectory::{CarFollowingPeriod, SAMPLE_DT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RndMode {
    /// One U[-0.5, 0.5] draw per step from the seeded stream.
    #[default]
    PerStep,
    /// Always 0.
    FrozenZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    /// A gap at or below this value counts as a collision.
    pub collision_threshold: f64,
    pub rng_seed: u64,
    pub w99_rnd_mode: RndMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 0.1, collision_threshold: 0.0, rng_seed: 0, w99_rnd_mode: RndMode::PerStep }
    }
}

impl SimConfig {
    /// Integration sub-steps per 0.1 s sample.
    pub fn substeps(&self) -> Result<usize> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        let m = (SAMPLE_DT / self.dt).round();
        if m < 1.0 || (m * self.dt - SAMPLE_DT).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("dt {} does not divide the 0.1 s sample spacing", self.dt)));
        }
        Ok(m as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub t: Vec<f64>,
    pub sim_fv_speed: Vec<f64>,
    pub sim_gap: Vec<f64>,
    /// Acceleration applied from each sample onward.
    pub accel: Vec<f64>,
    /// Wiedemann regime per sample; `None` for the other laws.
    pub regime: Vec<Option<Regime>>,
    pub collided: bool,
    pub collision_time: Option<f64>,
    /// Set when the law failed and the follower was frozen for the rest of
    /// the period.
    pub truncated: bool,
}

/// What a law returns for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LawOutput {
    pub accel: f64,
    pub regime: Option<Regime>,
}

/// Anything the simulator can drive.
pub trait FollowerLaw {
    /// Reaction time fed through the delay buffer (`*_delayed` inputs).
    fn input_delay(&self) -> Option<f64> {
        None
    }

    fn evaluate(&self, input: &ModelInput, rnd: f64, prev_accel: f64) -> Result<LawOutput, ModelError>;
}

impl FollowerLaw for ModelParams {
    fn input_delay(&self) -> Option<f64> {
        ModelParams::input_delay(self)
    }

    fn evaluate(&self, input: &ModelInput, rnd: f64, prev_accel: f64) -> Result<LawOutput, ModelError> {
        let plain = |accel| LawOutput { accel, regime: None };
        match self {
            ModelParams::Ghr(p) => ghr_accel(input, p).map(plain),
            ModelParams::Gipps(p) => {
                // the law gives the speed one reaction time ahead
                let target = gipps_speed(input, p).speed;
                Ok(plain((target - input.v_fv) / p.tau))
            }
            ModelParams::Idm(p) => idm_accel(input, p).map(plain),
            ModelParams::Fvd(p) => fvd_accel(input, p).map(plain),
            ModelParams::W99(p) => {
                let (accel, regime) = w99_accel(input, p, rnd, prev_accel);
                Ok(LawOutput { accel, regime: Some(regime) })
            }
        }
    }
}

/// Recorded state at one integration step, as seen by delayed laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryState {
    pub v_fv: f64,
    pub v_lv: f64,
    pub dx: f64,
}

/// Seed of the W99 random stream for one period: the configured seed mixed
/// with an FNV-1a hash of the period id, so every period gets its own stream
/// regardless of the order periods are simulated in.
pub fn period_seed(seed: u64, period_id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in period_id.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

/// Reaction time in whole steps, rounded to nearest with ties going up.
pub fn delay_steps(tau: f64, dt: f64) -> usize {
    let steps = tau / dt;
    // nudge values like 4.4999999 that are meant to be exact halves
    (steps + 0.5 + 1e-9).floor().max(0.0) as usize
}

/// State `delay` steps before `step`; before the buffer fills, the first
/// recorded state.
pub fn delayed_input(history: &[HistoryState], step: usize, delay: usize) -> HistoryState {
    history[step.saturating_sub(delay)]
}

/// Index and time of the first sample whose gap is at or below `threshold`.
pub fn detect_collision(t: &[f64], gaps: &[f64], threshold: f64) -> Option<(usize, f64)> {
    gaps.iter().position(|&g| g <= threshold).map(|i| (i, t[i]))
}

/// Replays `period` with `law` driving the follower.
pub fn simulate_period<L: FollowerLaw + ?Sized>(law: &L, period: &CarFollowingPeriod, cfg: &SimConfig) -> Result<SimResult> {
    let m = cfg.substeps()?;
    let n = period.samples.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    let samples = &period.samples;
    let (_, lv_pos) = period.reconstruct_positions();
    let lv_length = period.lv_length;
    let dt = cfg.dt;
    let delay = law.input_delay().map_or(0, |tau| delay_steps(tau, dt));
    let mut rng = ChaCha8Rng::seed_from_u64(period_seed(cfg.rng_seed, &period.period_id));

    let mut out = SimResult {
        t: Vec::with_capacity(n),
        sim_fv_speed: Vec::with_capacity(n),
        sim_gap: Vec::with_capacity(n),
        accel: Vec::with_capacity(n),
        regime: Vec::with_capacity(n),
        collided: false,
        collision_time: None,
        truncated: false,
    };

    let total = (n - 1) * m;
    let mut history: Vec<HistoryState> = Vec::with_capacity(total + 1);
    let mut x = 0.0;
    let mut v = samples[0].fv_speed;
    let mut prev_accel = 0.0;
    let mut failure_time = None;

    for j in 0..=total {
        let k = j / m;
        let sub = j % m;
        let lv_x = if sub == 0 {
            lv_pos[k]
        } else {
            let w = sub as f64 / m as f64;
            lv_pos[k] + w * (lv_pos[k + 1] - lv_pos[k])
        };
        let s = &samples[k];
        let lv_accel = if k == 0 { 0.0 } else { (s.lv_speed - samples[k - 1].lv_speed) / (s.t - samples[k - 1].t) };
        let gap = lv_x - x;
        let dx = gap + lv_length;
        history.push(HistoryState { v_fv: v, v_lv: s.lv_speed, dx });

        let rnd = match cfg.w99_rnd_mode {
            RndMode::PerStep => rng.random_range(-0.5..=0.5),
            RndMode::FrozenZero => 0.0,
        };

        let mut output = LawOutput { accel: 0.0, regime: None };
        if !out.truncated {
            let past = delayed_input(&history, j, delay);
            let input = ModelInput {
                v_fv: v,
                v_lv: s.lv_speed,
                gap,
                dx,
                lv_accel,
                v_fv_delayed: past.v_fv,
                v_lv_delayed: past.v_lv,
                dx_delayed: past.dx,
            };
            match law.evaluate(&input, rnd, prev_accel) {
                Ok(o) if o.accel.is_finite() => output = o,
                _ => {
                    out.truncated = true;
                    failure_time = Some(s.t + sub as f64 * dt);
                }
            }
        }

        if sub == 0 {
            out.t.push(s.t);
            out.sim_fv_speed.push(v);
            out.sim_gap.push(gap);
            out.accel.push(output.accel);
            out.regime.push(output.regime);
        }

        if j < total {
            x += v * dt;
            v = (v + output.accel * dt).max(0.0);
            prev_accel = output.accel;
        }
    }

    // a failed law counts as a collision; without a gap crossing the time
    // of the failure is reported
    let crossing = detect_collision(&out.t, &out.sim_gap, cfg.collision_threshold).map(|(_, t)| t);
    out.collided = crossing.is_some() || out.truncated;
    out.collision_time = crossing.or(failure_time);
    Ok(out)
}

/// Writes the per-sample trace CSV.
pub fn write_trace<W: Write>(out: W, period: &CarFollowingPeriod, result: &SimResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "sim_v_mps", "obs_v_mps", "sim_gap_m", "obs_gap_m", "accel_mps2", "regime"])?;
    for (i, s) in period.samples.iter().enumerate() {
        w.write_record([
            result.t[i].to_string(),
            result.sim_fv_speed[i].to_string(),
            s.fv_speed.to_string(),
            result.sim_gap[i].to_string(),
            s.gap.to_string(),
            result.accel[i].to_string(),
            result.regime[i].map(|r| r.as_str().to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GhrParams, IdmParams, Model};
    use crate::trajectory::TrajectorySample;

    pub(crate) struct ConstantAccel(pub f64);

    impl FollowerLaw for ConstantAccel {
        fn evaluate(&self, _: &ModelInput, _: f64, _: f64) -> Result<LawOutput, ModelError> {
            Ok(LawOutput { accel: self.0, regime: None })
        }
    }

    fn period(n: usize, v_lv: impl Fn(f64) -> f64, v_fv0: f64, gap0: f64) -> CarFollowingPeriod {
        // leader integrated with the same Euler rule the simulator uses
        let mut samples = Vec::with_capacity(n);
        let mut lv = gap0;
        let mut fv = 0.0;
        for k in 0..n {
            let t = k as f64 * 0.1;
            samples.push(TrajectorySample {
                t,
                fv_speed: v_fv0,
                gap: lv - fv,
                lv_speed: v_lv(t),
                lv_id: 1,
                lateral_offset: 0.0,
                lv_length: None,
            });
            lv += v_lv(t) * 0.1;
            fv += v_fv0 * 0.1;
        }
        CarFollowingPeriod { driver_id: "d".into(), period_id: "p".into(), samples, lv_length: 5.0 }
    }

    #[test]
    fn equilibrium_replay_keeps_gap() {
        let p = period(200, |_| 15.0, 15.0, 25.0);
        let r = simulate_period(&ConstantAccel(0.0), &p, &SimConfig::default()).unwrap();
        for g in &r.sim_gap {
            assert!((g - 25.0).abs() < 1e-9);
        }
        assert!(!r.collided);
    }

    #[test]
    fn euler_speed_update() {
        let p = period(3, |_| 10.0, 10.0, 30.0);
        let r = simulate_period(&ConstantAccel(2.0), &p, &SimConfig::default()).unwrap();
        assert!((r.sim_fv_speed[1] - 10.2).abs() < 1e-12);
    }

    #[test]
    fn negative_speed_clamped() {
        let p = period(3, |_| 10.0, 0.05, 30.0);
        let r = simulate_period(&ConstantAccel(-2.0), &p, &SimConfig::default()).unwrap();
        assert_eq!(r.sim_fv_speed[1], 0.0);
        assert_eq!(r.sim_fv_speed[2], 0.0);
    }

    #[test]
    fn initial_values_match_observation() {
        let p = period(50, |t| 12.0 + t, 11.0, 18.0);
        let law = ModelParams::median(Model::Idm);
        let r = simulate_period(&law, &p, &SimConfig::default()).unwrap();
        assert_eq!(r.sim_fv_speed[0], 11.0);
        assert_eq!(r.sim_gap[0], 18.0);
        assert_eq!(r.t.len(), 50);
    }

    #[test]
    fn delay_rounding() {
        assert_eq!(delay_steps(0.5, 0.1), 5);
        assert_eq!(delay_steps(0.44, 0.1), 4);
        assert_eq!(delay_steps(0.45, 0.1), 5);
        assert_eq!(delay_steps(0.3, 0.1), 3);
        assert_eq!(delay_steps(1.2, 0.1), 12);
    }

    #[test]
    fn delayed_lookup() {
        let h: Vec<_> = (0..30).map(|i| HistoryState { v_fv: i as f64, v_lv: 0.0, dx: 0.0 }).collect();
        // t = 2.0 s is step 20, tau = 0.5 s is 5 steps
        assert_eq!(delayed_input(&h, 20, delay_steps(0.5, 0.1)).v_fv, 15.0);
        assert_eq!(delayed_input(&h, 3, delay_steps(0.5, 0.1)).v_fv, 0.0);
    }

    #[test]
    fn collision_detection() {
        let t = [0.0, 0.1, 0.2, 0.3];
        assert_eq!(detect_collision(&t, &[1.0, 2.0, 1.0, 3.0], 0.0), None);
        assert_eq!(detect_collision(&t, &[5.0, 1.0, -0.2, 3.0], 0.0), Some((2, 0.2)));
        assert_eq!(detect_collision(&t, &[5.0, 0.0, 1.0, 3.0], 0.0), Some((1, 0.1)));
    }

    #[test]
    fn collision_latches_and_simulation_continues() {
        let p = period(100, |_| 10.0, 10.0, 5.0);
        let r = simulate_period(&ConstantAccel(3.0), &p, &SimConfig::default()).unwrap();
        assert!(r.collided);
        let (i, t) = detect_collision(&r.t, &r.sim_gap, 0.0).unwrap();
        assert_eq!(r.collision_time, Some(t));
        assert!(r.sim_gap[i] <= 0.0);
        assert_eq!(r.sim_gap.len(), 100);
        assert!(!r.truncated);
    }

    #[test]
    fn model_failure_truncates() {
        // GHR pushed through the leader ends up with dx <= 0
        let law = ModelParams::Ghr(GhrParams { alpha: 0.0, beta: 0.0, gamma: 1.0, tau: 0.3 });
        let p = period(200, |_| 0.0, 20.0, 20.0);
        let r = simulate_period(&law, &p, &SimConfig::default()).unwrap();
        assert!(r.collided && r.truncated);
        assert_eq!(r.sim_gap.len(), 200);
        let t = r.collision_time.unwrap();
        let i = r.t.iter().position(|&x| x == t).unwrap();
        assert!(r.sim_gap[i] <= 0.0);
    }

    #[test]
    fn deterministic_w99() {
        let p = period(300, |t| 14.0 + 3.0 * (t / 4.0).sin(), 14.0, 20.0);
        let law = ModelParams::median(Model::W99);
        let cfg = SimConfig { rng_seed: 9, ..Default::default() };
        let a = simulate_period(&law, &p, &cfg).unwrap();
        let b = simulate_period(&law, &p, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.regime.iter().all(|r| r.is_some()));
    }

    #[test]
    fn substeps_accepted() {
        let p = period(50, |_| 15.0, 15.0, 25.0);
        let cfg = SimConfig { dt: 0.05, ..Default::default() };
        let r = simulate_period(&ConstantAccel(0.0), &p, &cfg).unwrap();
        assert_eq!(r.sim_gap.len(), 50);
        assert!((r.sim_gap[49] - 25.0).abs() < 1e-9);
        assert!(SimConfig { dt: 0.03, ..Default::default() }.substeps().is_err());
    }

    #[test]
    fn idm_follows_without_collision() {
        let p = period(600, |t| 15.0 + 5.0 * (t / 6.0).sin(), 15.0, 30.0);
        let law = ModelParams::Idm(IdmParams { a_max: 1.2, v_des: 110.0, beta: 4.0, b_comf: 1.5, s_jam: 2.0, t_des: 1.2 });
        let r = simulate_period(&law, &p, &SimConfig::default()).unwrap();
        assert!(!r.collided);
        assert!(r.sim_fv_speed.iter().all(|&v| v >= 0.0));
    }
}
