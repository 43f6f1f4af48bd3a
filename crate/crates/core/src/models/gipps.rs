use serde::{Deserialize, Serialize};

use super::{ModelInput, KMH_TO_MPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GippsParams {
    /// Maximum desired acceleration, m/s².
    pub a_des: f64,
    /// Maximum desired deceleration (magnitude), m/s².
    pub b_des: f64,
    /// Effective leader length including the standstill margin, m.
    pub s_eff: f64,
    /// Follower's estimate of the leader's deceleration (magnitude), m/s².
    pub b_hat: f64,
    /// Desired speed, km/h.
    pub v_des: f64,
    /// Reaction time, s.
    pub tau: f64,
}

/// Outcome of the Gipps law: the speed one reaction time ahead plus both
/// branch values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GippsSpeed {
    pub speed: f64,
    pub free: f64,
    /// `None` when the safe-speed radicand is negative.
    pub following: Option<f64>,
    /// Set when the safe-speed branch has no real solution; `speed` is 0.
    pub infeasible: bool,
}

/// Speed at `t + tau`: the lower of the free-flow and safe-following speeds,
/// floored at zero.
pub fn gipps_speed(input: &ModelInput, p: &GippsParams) -> GippsSpeed {
    let v = input.v_fv;
    let v_des = p.v_des * KMH_TO_MPS;
    let ratio = v / v_des;
    let free = v + 2.5 * p.a_des * p.tau * (1.0 - ratio) * (0.025 + ratio).sqrt();

    let bt = p.b_des * p.tau;
    let radicand =
        bt * bt + p.b_des * (2.0 * (input.dx - p.s_eff) - v * p.tau + input.v_lv * input.v_lv / p.b_hat);
    if radicand < 0.0 {
        return GippsSpeed { speed: 0.0, free, following: None, infeasible: true };
    }
    let following = -bt + radicand.sqrt();
    GippsSpeed { speed: free.min(following).max(0.0), free, following: Some(following), infeasible: false }
}
