use serde::{Deserialize, Serialize};

use super::{ModelError, ModelInput, KMH_TO_MPS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FvdParams {
    /// Sensitivity to the optimal-velocity gap, 1/s.
    pub alpha: f64,
    /// Sensitivity to relative speed.
    pub lambda0: f64,
    /// Desired speed, km/h.
    pub v0: f64,
    /// Interaction length, m.
    pub b_len: f64,
    /// Form factor.
    pub beta: f64,
    /// Headway above which the relative-speed term is dropped, m.
    pub s_c: f64,
}

/// `V*(dx) = (V0/2) [tanh((dx - L)/b - beta) - tanh(-beta)]`, floored at 0.
pub fn fvd_optimal_velocity(dx: f64, lv_length: f64, p: &FvdParams) -> Result<f64, ModelError> {
    if p.b_len == 0.0 {
        return Err(ModelError::ZeroInteractionLength);
    }
    let v0 = p.v0 * KMH_TO_MPS;
    let v = 0.5 * v0 * (((dx - lv_length) / p.b_len - p.beta).tanh() - (-p.beta).tanh());
    Ok(v.max(0.0))
}

pub fn fvd_accel(input: &ModelInput, p: &FvdParams) -> Result<f64, ModelError> {
    let v_opt = fvd_optimal_velocity(input.dx, input.lv_length(), p)?;
    let lambda = if input.dx <= p.s_c { p.lambda0 } else { 0.0 };
    Ok(p.alpha * (v_opt - input.v_fv) + lambda * input.dv_opening())
}
