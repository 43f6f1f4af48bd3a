//! Wiedemann 99 psycho-physical law.
//!
//! Thresholds use the lead-minus-follower speed difference
//! `dv = v_lv - v_fv` throughout. The regime accelerations follow the
//! VISSIM pseudocode published by Vortisch; emergency braking is capped at
//! [`EMERGENCY_DECEL`].

use serde::{Deserialize, Serialize};

use super::{ModelInput, KMH_TO_MPS};

/// Hardest deceleration the law will request, m/s².
pub const EMERGENCY_DECEL: f64 = 8.0;

/// Speed at which the acceleration cap reaches `cc9`.
const CAP_SPEED: f64 = 80.0 * KMH_TO_MPS;

/// `cc6` is tabulated in units of 1e-4.
const CC6_SCALE: f64 = 1e-4;

/// Leader deceleration below which the follower uses its own speed for the
/// safety distance.
const LV_HARD_BRAKE: f64 = -1.0;

/// Time over which the free-driving law closes the gap to the desired speed, s.
const FREE_RELAXATION: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct W99Params {
    /// Standstill gap, m.
    pub cc0: f64,
    /// Headway time, s.
    pub cc1: f64,
    /// Following variation, m.
    pub cc2: f64,
    /// Threshold for entering following, s.
    pub cc3: f64,
    /// Negative following threshold, m/s.
    pub cc4: f64,
    /// Positive following threshold, m/s.
    pub cc5: f64,
    /// Speed dependency of oscillation, 1e-4 rad/s.
    pub cc6: f64,
    /// Oscillation acceleration, m/s².
    pub cc7: f64,
    /// Standstill acceleration, m/s².
    pub cc8: f64,
    /// Acceleration at 80 km/h, m/s².
    pub cc9: f64,
    /// Desired speed, km/h.
    pub v_des: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct W99Thresholds {
    /// Minimum safe following distance.
    pub sdx_c: f64,
    /// Maximum following distance.
    pub sdx_o: f64,
    /// Distance at which an approach to a slower leader is perceived.
    pub sdx_v: f64,
    /// Speed-difference perception threshold.
    pub sdv: f64,
    /// Closing threshold at short, decreasing distances.
    pub cldv: f64,
    /// Opening threshold at short, increasing distances.
    pub opdv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Regime {
    Free,
    Closing,
    Following,
    Emergency,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Free => "FREE",
            Regime::Closing => "CLOSING",
            Regime::Following => "FOLLOWING",
            Regime::Emergency => "EMERGENCY",
        }
    }
}

/// Regime thresholds for the current state. `rnd` is the driver's draw from
/// U[-0.5, 0.5].
pub fn w99_thresholds(input: &ModelInput, p: &W99Params, rnd: f64) -> W99Thresholds {
    let dv = input.dv_opening();
    let v_slower = if dv > 0.0 || input.lv_accel < LV_HARD_BRAKE {
        input.v_fv
    } else {
        input.v_lv - dv * rnd
    };
    let sdx_c = p.cc0 + p.cc1 * v_slower;
    let spacing = input.gap - input.lv_length();
    let sdv = p.cc6 * CC6_SCALE * spacing * spacing;
    let sdx_o = sdx_c + p.cc2;
    let sdx_v = sdx_o + p.cc3 * (dv - p.cc4);
    let cldv = if input.v_lv > 0.0 { -sdv + p.cc4 } else { 0.0 };
    let opdv = if input.v_fv > p.cc5 { sdv + p.cc5 } else { sdv };
    W99Thresholds { sdx_c, sdx_o, sdx_v, sdv, cldv, opdv }
}

/// Classifies the state. Boundaries belong to the calmer regime; emergency
/// applies strictly below `sdx_c`.
pub fn w99_regime(gap: f64, dv_opening: f64, th: &W99Thresholds) -> Regime {
    if gap < th.sdx_c {
        Regime::Emergency
    } else if gap <= th.sdx_o && dv_opening >= th.cldv && dv_opening <= th.opdv {
        Regime::Following
    } else if gap < th.sdx_v && dv_opening < th.cldv {
        Regime::Closing
    } else {
        Regime::Free
    }
}

/// Acceleration cap, interpolated linearly from `cc8` at standstill to `cc9`
/// at 80 km/h and held constant above.
pub fn accel_cap(v: f64, p: &W99Params) -> f64 {
    let w = (v / CAP_SPEED).clamp(0.0, 1.0);
    p.cc8 + (p.cc9 - p.cc8) * w
}

/// Acceleration and regime. `prev_accel` is the follower's previous
/// acceleration; its sign sets the direction of the following oscillation.
pub fn w99_accel(input: &ModelInput, p: &W99Params, rnd: f64, prev_accel: f64) -> (f64, Regime) {
    let th = w99_thresholds(input, p, rnd);
    let dv = input.dv_opening();
    let gap = input.gap;
    let v = input.v_fv;
    let cap = accel_cap(v, p);
    let osc = p.cc7.abs();
    let regime = w99_regime(gap, dv, &th);

    let a = match regime {
        Regime::Emergency => {
            let mut a = 0.0;
            if dv < 0.0 {
                a = if gap > p.cc0 {
                    input.lv_accel + dv * dv / (p.cc0 - gap)
                } else {
                    input.lv_accel + 0.5 * (dv - th.opdv)
                };
            }
            a.min(-osc).max(-EMERGENCY_DECEL)
        }
        Regime::Closing => {
            // null the speed difference by the time the gap shrinks to sdx_c
            let a = input.lv_accel + 0.5 * dv * dv / (th.sdx_c - gap - 0.1);
            a.max(-EMERGENCY_DECEL).min(cap)
        }
        Regime::Following => {
            if prev_accel > 0.0 {
                osc.min(cap)
            } else {
                -osc
            }
        }
        Regime::Free => {
            let v_des = p.v_des * KMH_TO_MPS;
            ((v_des - v) / FREE_RELAXATION).clamp(-cap.max(osc), cap)
        }
    };
    (a, regime)
}
