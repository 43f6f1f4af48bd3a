use serde::{Deserialize, Serialize};

use super::{ModelError, ModelInput, KMH_TO_MPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdmParams {
    /// Maximum acceleration, m/s².
    pub a_max: f64,
    /// Desired speed, km/h.
    pub v_des: f64,
    /// Acceleration exponent.
    pub beta: f64,
    /// Comfortable deceleration (magnitude), m/s².
    pub b_comf: f64,
    /// Standstill gap, m.
    pub s_jam: f64,
    /// Desired time headway, s.
    pub t_des: f64,
}

/// Desired gap `s_jam + max(0, v*T + v*dv_closing / (2*sqrt(a*b)))`. The gap
/// grows while the follower closes in.
pub fn idm_desired_gap(v_fv: f64, dv_closing: f64, p: &IdmParams) -> f64 {
    let dynamic = v_fv * p.t_des + v_fv * dv_closing / (2.0 * (p.a_max * p.b_comf).sqrt());
    p.s_jam + dynamic.max(0.0)
}

pub fn idm_accel(input: &ModelInput, p: &IdmParams) -> Result<f64, ModelError> {
    if input.gap <= 0.0 {
        return Err(ModelError::NonPositiveGap(input.gap));
    }
    let v_des = p.v_des * KMH_TO_MPS;
    let desired = idm_desired_gap(input.v_fv, input.dv_closing(), p);
    let a = p.a_max * (1.0 - (input.v_fv / v_des).powf(p.beta) - (desired / input.gap).powi(2));
    if a.is_finite() {
        Ok(a)
    } else {
        Err(ModelError::NonFinite)
    }
}
