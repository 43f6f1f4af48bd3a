use serde::{Deserialize, Serialize};

use super::{ModelError, ModelInput};

/// Speed floor used inside `v^beta` so that negative exponents stay finite
/// at standstill.
const MIN_POWER_SPEED: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GhrParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Reaction time, s.
    pub tau: f64,
}

/// Stimulus-response acceleration: `alpha * v^beta * dv_opening(t-tau) / dx(t-tau)^gamma`.
pub fn ghr_accel(input: &ModelInput, p: &GhrParams) -> Result<f64, ModelError> {
    if input.dx_delayed <= 0.0 {
        return Err(ModelError::NonPositiveHeadway(input.dx_delayed));
    }
    let stimulus = input.v_lv_delayed - input.v_fv_delayed;
    if stimulus == 0.0 {
        return Ok(0.0);
    }
    let speed = if p.beta < 0.0 { input.v_fv.max(MIN_POWER_SPEED) } else { input.v_fv };
    let a = p.alpha * speed.powf(p.beta) * stimulus / input.dx_delayed.powf(p.gamma);
    if a.is_finite() {
        Ok(a)
    } else {
        Err(ModelError::NonFinite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(v_fv: f64, dv_opening: f64, dx: f64) -> ModelInput {
        ModelInput {
            v_fv,
            v_lv: v_fv + dv_opening,
            gap: dx - 5.0,
            dx,
            lv_accel: 0.0,
            v_fv_delayed: v_fv,
            v_lv_delayed: v_fv + dv_opening,
            dx_delayed: dx,
        }
    }

    const UNIT: GhrParams = GhrParams { alpha: 1.0, beta: 1.0, gamma: 1.0, tau: 1.0 };

    #[test]
    fn hand_evaluated() {
        assert_eq!(ghr_accel(&input(10.0, -2.0, 20.0), &UNIT).unwrap(), -1.0);
    }

    #[test]
    fn zero_stimulus() {
        let p = GhrParams { alpha: 37.0, beta: -3.0, gamma: 4.0, tau: 2.0 };
        assert_eq!(ghr_accel(&input(0.0, 0.0, 7.0), &p).unwrap(), 0.0);
        assert_eq!(ghr_accel(&input(25.0, 0.0, 70.0), &p).unwrap(), 0.0);
    }

    #[test]
    fn beta_zero_ignores_speed() {
        let p = GhrParams { beta: 0.0, ..UNIT };
        let mut a = input(5.0, -1.0, 30.0);
        let first = ghr_accel(&a, &p).unwrap();
        a.v_fv = 25.0;
        assert_eq!(ghr_accel(&a, &p).unwrap(), first);
    }

    #[test]
    fn linear_in_alpha() {
        let x = input(13.0, -0.7, 22.0);
        let p = GhrParams { alpha: 3.3, beta: 0.6, gamma: 1.5, tau: 0.5 };
        let doubled = GhrParams { alpha: 6.6, ..p };
        let (a, b) = (ghr_accel(&x, &p).unwrap(), ghr_accel(&x, &doubled).unwrap());
        assert!((b - 2.0 * a).abs() <= 1e-12 * a.abs());
    }

    #[test]
    fn uses_delayed_stimulus() {
        let mut x = input(10.0, 0.0, 20.0);
        x.v_lv_delayed = 8.0;
        x.dx_delayed = 40.0;
        assert_eq!(ghr_accel(&x, &UNIT).unwrap(), 10.0 * -2.0 / 40.0);
    }

    #[test]
    fn non_positive_headway() {
        let mut x = input(10.0, -1.0, 20.0);
        x.dx_delayed = 0.0;
        assert_eq!(ghr_accel(&x, &UNIT), Err(ModelError::NonPositiveHeadway(0.0)));
    }
}
