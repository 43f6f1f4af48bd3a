//! Car-following laws and their parameter tables.
//!
//! Sign convention used across the crate: `dv_closing = v_fv - v_lv` is
//! positive while the follower approaches its leader, `dv_opening` is its
//! negation. Desired speeds are stored in km/h and converted to m/s exactly
//! once, inside each law.

mod fvd;
mod ghr;
mod gipps;
mod idm;
mod w99;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

pub use fvd::{fvd_accel, fvd_optimal_velocity, FvdParams};
pub use ghr::{ghr_accel, GhrParams};
pub use gipps::{gipps_speed, GippsParams, GippsSpeed};
pub use idm::{idm_accel, idm_desired_gap, IdmParams};
pub use w99::{accel_cap, w99_accel, w99_regime, w99_thresholds, Regime, W99Params, W99Thresholds, EMERGENCY_DECEL};

pub const KMH_TO_MPS: f64 = 1.0 / 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ModelError {
    #[error("space headway {0} m is not positive")]
    NonPositiveHeadway(f64),
    #[error("gap {0} m is not positive")]
    NonPositiveGap(f64),
    #[error("interaction length b is zero")]
    ZeroInteractionLength,
    #[error("law produced a non-finite value")]
    NonFinite,
}

/// State seen by a law at one time step. The `*_delayed` fields hold the
/// state one reaction time earlier; laws without a delay ignore them.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ModelInput {
    pub v_fv: f64,
    pub v_lv: f64,
    /// Net spacing.
    pub gap: f64,
    /// Space headway, `gap + lv_length`.
    pub dx: f64,
    pub lv_accel: f64,
    pub v_fv_delayed: f64,
    pub v_lv_delayed: f64,
    pub dx_delayed: f64,
}

impl ModelInput {
    /// Input with the delayed fields equal to the current state.
    pub fn current(v_fv: f64, v_lv: f64, gap: f64, lv_length: f64) -> Self {
        Self {
            v_fv,
            v_lv,
            gap,
            dx: gap + lv_length,
            lv_accel: 0.0,
            v_fv_delayed: v_fv,
            v_lv_delayed: v_lv,
            dx_delayed: gap + lv_length,
        }
    }

    pub fn lv_length(&self) -> f64 {
        self.dx - self.gap
    }

    pub fn dv_closing(&self) -> f64 {
        self.v_fv - self.v_lv
    }

    pub fn dv_opening(&self) -> f64 {
        self.v_lv - self.v_fv
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Ghr,
    Gipps,
    Idm,
    Fvd,
    W99,
}

impl Model {
    pub const ALL: [Model; 5] = [Model::Ghr, Model::Gipps, Model::Idm, Model::Fvd, Model::W99];

    pub fn name(self) -> &'static str {
        match self {
            Model::Ghr => "ghr",
            Model::Gipps => "gipps",
            Model::Idm => "idm",
            Model::Fvd => "fvd",
            Model::W99 => "w99",
        }
    }

    /// Calibration bounds and reference medians, in canonical parameter order.
    pub fn params(self) -> &'static [ParamSpec] {
        match self {
            Model::Ghr => GHR_SPECS,
            Model::Gipps => GIPPS_SPECS,
            Model::Idm => IDM_SPECS,
            Model::Fvd => FVD_SPECS,
            Model::W99 => W99_SPECS,
        }
    }

    pub fn dim(self) -> usize {
        self.params().len()
    }

    pub fn bounds(self) -> Vec<(f64, f64)> {
        self.params().iter().map(|p| (p.lower, p.upper)).collect()
    }

    pub fn median_genome(self) -> Vec<f64> {
        self.params().iter().map(|p| p.median).collect()
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ghr" => Ok(Model::Ghr),
            "gipps" => Ok(Model::Gipps),
            "idm" => Ok(Model::Idm),
            "fvd" => Ok(Model::Fvd),
            "w99" | "wiedemann99" => Ok(Model::W99),
            _ => Err(Error::UnknownModel(s.to_string())),
        }
    }
}

/// One row of a model's parameter table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub unit: &'static str,
    pub description: &'static str,
    pub lower: f64,
    pub upper: f64,
    /// Median of published driver-level estimates; used as a reference
    /// ground truth for synthetic experiments.
    pub median: f64,
}

const fn spec(
    name: &'static str,
    unit: &'static str,
    description: &'static str,
    lower: f64,
    upper: f64,
    median: f64,
) -> ParamSpec {
    ParamSpec { name, unit, description, lower, upper, median }
}

static GHR_SPECS: &[ParamSpec] = &[
    spec("alpha", "-", "Constant sensitivity coefficient", 0.0, 60.0, 8.3527),
    spec("beta", "-", "Sensitivity to FV speed", -10.0, 10.0, 0.5891),
    spec("gamma", "-", "Sensitivity to space headway", 0.0, 10.0, 1.5047),
    spec("tau", "s", "Reaction time", 0.3, 3.0, 0.5),
];

static GIPPS_SPECS: &[ParamSpec] = &[
    spec("a_des", "m/s2", "Maximum desired acceleration of FV", 0.1, 5.0, 0.8563),
    spec("b_des", "m/s2", "Maximum desired deceleration of FV", 0.1, 5.0, 1.1379),
    spec("s_eff", "m", "Effective length of LV", 5.0, 15.0, 5.4207),
    spec("b_hat", "m/s2", "Maximum desired deceleration of LV", 0.1, 5.0, 1.0361),
    spec("v_des", "km/h", "Desired speed of FV", 1.0, 150.0, 83.2725),
    spec("tau", "s", "Reaction time", 0.3, 3.0, 1.2),
];

static IDM_SPECS: &[ParamSpec] = &[
    spec("a_max", "m/s2", "Maximum acceleration/deceleration of FV", 0.1, 5.0, 0.8088),
    spec("v_des", "km/h", "Desired speed of FV", 1.0, 150.0, 101.9284),
    spec("beta", "-", "Acceleration exponent", 1.0, 40.0, 1.5),
    spec("b_comf", "m/s2", "Comfortable deceleration of FV", 0.1, 5.0, 0.6123),
    spec("s_jam", "m", "Gap at standstill", 0.1, 10.0, 1.3812),
    spec("t_des", "s", "Desired time headway of FV", 0.1, 5.0, 0.9459),
];

static FVD_SPECS: &[ParamSpec] = &[
    spec("alpha", "1/s", "Constant sensitivity coefficient", 0.05, 20.0, 0.05),
    spec("lambda0", "1/s", "Sensitivity to relative speed", 0.0, 3.0, 0.6402),
    spec("v0", "km/h", "Desired speed of FV", 1.0, 252.0, 100.7714),
    spec("b_len", "m", "Interaction length", 0.1, 100.0, 16.6407),
    spec("beta", "-", "Form factor", 0.1, 10.0, 0.7802),
    spec("s_c", "m", "Max following distance", 10.0, 120.0, 42.3362),
];

static W99_SPECS: &[ParamSpec] = &[
    spec("cc0", "m", "Standstill gap", 0.0, 20.0, 0.6306),
    spec("cc1", "s", "Headway time", 0.0, 5.0, 1.375),
    spec("cc2", "m", "'Following' variation", 0.0, 10.0, 5.2325),
    spec("cc3", "s", "Threshold for entering 'following'", -20.0, 0.0, -19.4882),
    spec("cc4", "m/s", "Negative 'following' threshold", -5.0, 0.0, -0.1215),
    spec("cc5", "m/s", "Positive 'following' threshold", 0.1, 5.0, 1.2263),
    spec("cc6", "1e-4 rad/s", "Speed dependency of oscillation", 0.1, 20.0, 1.964),
    spec("cc7", "m/s2", "Oscillation acceleration", -1.0, 1.0, 0.5379),
    spec("cc8", "m/s2", "Standstill acceleration", 0.0, 8.0, 3.9712),
    spec("cc9", "m/s2", "Acceleration at 80 km/h", 0.0, 8.0, 0.6971),
    spec("v_des", "km/h", "Desired speed of FV", 1.0, 150.0, 81.1745),
];

/// A parameter vector for one of the five models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Ghr(GhrParams),
    Gipps(GippsParams),
    Idm(IdmParams),
    Fvd(FvdParams),
    W99(W99Params),
}

impl ModelParams {
    pub fn model(&self) -> Model {
        match self {
            ModelParams::Ghr(_) => Model::Ghr,
            ModelParams::Gipps(_) => Model::Gipps,
            ModelParams::Idm(_) => Model::Idm,
            ModelParams::Fvd(_) => Model::Fvd,
            ModelParams::W99(_) => Model::W99,
        }
    }

    /// Builds parameters from a genome in canonical order. No bounds check.
    pub fn from_genome(model: Model, g: &[f64]) -> Result<Self> {
        if g.len() != model.dim() {
            return Err(Error::LengthMismatch(g.len(), model.dim()));
        }
        Ok(match model {
            Model::Ghr => ModelParams::Ghr(GhrParams { alpha: g[0], beta: g[1], gamma: g[2], tau: g[3] }),
            Model::Gipps => ModelParams::Gipps(GippsParams {
                a_des: g[0],
                b_des: g[1],
                s_eff: g[2],
                b_hat: g[3],
                v_des: g[4],
                tau: g[5],
            }),
            Model::Idm => ModelParams::Idm(IdmParams {
                a_max: g[0],
                v_des: g[1],
                beta: g[2],
                b_comf: g[3],
                s_jam: g[4],
                t_des: g[5],
            }),
            Model::Fvd => ModelParams::Fvd(FvdParams {
                alpha: g[0],
                lambda0: g[1],
                v0: g[2],
                b_len: g[3],
                beta: g[4],
                s_c: g[5],
            }),
            Model::W99 => ModelParams::W99(W99Params {
                cc0: g[0],
                cc1: g[1],
                cc2: g[2],
                cc3: g[3],
                cc4: g[4],
                cc5: g[5],
                cc6: g[6],
                cc7: g[7],
                cc8: g[8],
                cc9: g[9],
                v_des: g[10],
            }),
        })
    }

    pub fn genome(&self) -> Vec<f64> {
        match *self {
            ModelParams::Ghr(p) => vec![p.alpha, p.beta, p.gamma, p.tau],
            ModelParams::Gipps(p) => vec![p.a_des, p.b_des, p.s_eff, p.b_hat, p.v_des, p.tau],
            ModelParams::Idm(p) => vec![p.a_max, p.v_des, p.beta, p.b_comf, p.s_jam, p.t_des],
            ModelParams::Fvd(p) => vec![p.alpha, p.lambda0, p.v0, p.b_len, p.beta, p.s_c],
            ModelParams::W99(p) => {
                vec![p.cc0, p.cc1, p.cc2, p.cc3, p.cc4, p.cc5, p.cc6, p.cc7, p.cc8, p.cc9, p.v_des]
            }
        }
    }

    pub fn median(model: Model) -> Self {
        Self::from_genome(model, &model.median_genome()).expect("median table has model dimension")
    }

    pub fn check_bounds(&self) -> Result<()> {
        for (spec, value) in self.model().params().iter().zip(self.genome()) {
            if !(spec.lower..=spec.upper).contains(&value) {
                return Err(Error::OutOfBounds { name: spec.name, value, lower: spec.lower, upper: spec.upper });
            }
        }
        Ok(())
    }

    /// Reaction time applied through the delay buffer, if the law has one.
    pub fn input_delay(&self) -> Option<f64> {
        match self {
            ModelParams::Ghr(p) => Some(p.tau),
            _ => None,
        }
    }

    /// JSON object keyed by field name, without the model tag.
    pub fn to_json(&self) -> serde_json::Value {
        let v = match self {
            ModelParams::Ghr(p) => serde_json::to_value(p),
            ModelParams::Gipps(p) => serde_json::to_value(p),
            ModelParams::Idm(p) => serde_json::to_value(p),
            ModelParams::Fvd(p) => serde_json::to_value(p),
            ModelParams::W99(p) => serde_json::to_value(p),
        };
        v.expect("plain struct serializes")
    }

    pub fn from_json(model: Model, value: &serde_json::Value) -> Result<Self> {
        let v = value.clone();
        Ok(match model {
            Model::Ghr => ModelParams::Ghr(serde_json::from_value(v)?),
            Model::Gipps => ModelParams::Gipps(serde_json::from_value(v)?),
            Model::Idm => ModelParams::Idm(serde_json::from_value(v)?),
            Model::Fvd => ModelParams::Fvd(serde_json::from_value(v)?),
            Model::W99 => ModelParams::W99(serde_json::from_value(v)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn medians_lie_within_bounds() {
        for m in Model::ALL {
            ModelParams::median(m).check_bounds().unwrap();
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("w74".parse::<Model>().is_err());
    }

    #[test]
    fn json_is_keyed_by_field_name() {
        let p = ModelParams::median(Model::Idm);
        let j = p.to_json();
        assert_eq!(j["s_jam"], 1.3812);
        assert_eq!(ModelParams::from_json(Model::Idm, &j).unwrap(), p);
        let keys: Vec<_> = j.as_object().unwrap().keys().cloned().collect();
        let names: Vec<_> = Model::Idm.params().iter().map(|s| s.name.to_string()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        let mut k2 = keys;
        k2.sort();
        assert_eq!(k2, sorted);
    }

    #[test]
    fn out_of_bounds_detected() {
        let mut g = Model::Ghr.median_genome();
        g[3] = 0.1;
        let err = ModelParams::from_genome(Model::Ghr, &g).unwrap().check_bounds().unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { name: "tau", .. }));
    }

    fn genome_in(model: Model) -> impl Strategy<Value = Vec<f64>> {
        model.bounds().into_iter().map(|(lo, hi)| lo..=hi).collect::<Vec<_>>()
    }

    fn any_model_genome() -> impl Strategy<Value = (Model, Vec<f64>)> {
        prop_oneof![
            genome_in(Model::Ghr).prop_map(|g| (Model::Ghr, g)),
            genome_in(Model::Gipps).prop_map(|g| (Model::Gipps, g)),
            genome_in(Model::Idm).prop_map(|g| (Model::Idm, g)),
            genome_in(Model::Fvd).prop_map(|g| (Model::Fvd, g)),
            genome_in(Model::W99).prop_map(|g| (Model::W99, g)),
        ]
    }

    proptest! {
        #[test]
        fn genome_round_trip((model, g) in any_model_genome()) {
            let p = ModelParams::from_genome(model, &g).unwrap();
            prop_assert_eq!(p.genome(), g);
            prop_assert!(p.check_bounds().is_ok());
        }

        #[test]
        fn laws_are_finite_in_bounds(
            (model, g) in any_model_genome(),
            gap in 0.01f64..=200.0,
            v_fv in 0.0f64..=60.0,
            v_lv in 0.0f64..=60.0,
            lv_len in 3.0f64..=15.0,
            lv_accel in -8.0f64..=8.0,
            rnd in -0.5f64..=0.5,
            prev in prop::sample::select(vec![-1.0, 1.0]),
        ) {
            let mut input = ModelInput::current(v_fv, v_lv, gap, lv_len);
            input.lv_accel = lv_accel;
            let out = match ModelParams::from_genome(model, &g).unwrap() {
                ModelParams::Ghr(p) => ghr_accel(&input, &p).unwrap(),
                ModelParams::Gipps(p) => gipps_speed(&input, &p).speed,
                ModelParams::Idm(p) => idm_accel(&input, &p).unwrap(),
                ModelParams::Fvd(p) => fvd_accel(&input, &p).unwrap(),
                ModelParams::W99(p) => w99_accel(&input, &p, rnd, prev).0,
            };
            prop_assert!(out.is_finite(), "{model} {g:?} -> {out}");
        }
    }
}
