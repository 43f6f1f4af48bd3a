//! JSON run configuration shared by the CLI commands.
//!
//! Every field is optional. Example:
//!
//! ```json
//! {
//!   "models": ["idm", "gipps"],
//!   "data": "periods",
//!   "out": "results",
//!   "k": 5,
//!   "extraction": { "max_gap": 120, "max_lateral": 2.5, "min_duration": 15, "max_dropout": 0 },
//!   "sim": { "dt": 0.1, "collision_threshold": 0, "rng_seed": 0, "w99_rnd_mode": "per-step" },
//!   "ga": { "n_restarts": 12, "pop_size": 300 },
//!   "objective": { "penalty": 10000, "aggregation": "pooled" },
//!   "observed": { "accel_statistic": "max" },
//!   "report": { "plots": true, "overlays": 3 }
//! }
//! ```
//!
//! GA fields left out keep the per-model defaults.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::GaConfig;
use crate::models::Model;
use crate::objective::ObjectiveConfig;
use crate::simulator::SimConfig;
use crate::trajectory::ExtractionCriteria;
use crate::workflow::{CalibrationConfig, ObservedConfig};

/// GA settings that override the per-model defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaOverrides {
    pub pop_size: Option<usize>,
    pub max_generations: Option<usize>,
    pub stall_generations: Option<usize>,
    pub function_tolerance: Option<f64>,
    pub elite_fraction: Option<f64>,
    pub crossover_fraction: Option<f64>,
    pub mutation_scale: Option<f64>,
    pub mutation_shrink: Option<f64>,
    pub seed: Option<u64>,
    pub n_restarts: Option<usize>,
}

impl GaOverrides {
    pub fn apply(&self, model: Model) -> GaConfig {
        let d = GaConfig::for_model(model);
        GaConfig {
            pop_size: self.pop_size.unwrap_or(d.pop_size),
            max_generations: self.max_generations.unwrap_or(d.max_generations),
            stall_generations: self.stall_generations.unwrap_or(d.stall_generations),
            function_tolerance: self.function_tolerance.unwrap_or(d.function_tolerance),
            elite_fraction: self.elite_fraction.unwrap_or(d.elite_fraction),
            crossover_fraction: self.crossover_fraction.unwrap_or(d.crossover_fraction),
            mutation_scale: self.mutation_scale.unwrap_or(d.mutation_scale),
            mutation_shrink: self.mutation_shrink.unwrap_or(d.mutation_shrink),
            seed: self.seed.unwrap_or(d.seed),
            n_restarts: self.n_restarts.unwrap_or(d.n_restarts),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportFlags {
    pub plots: bool,
    /// Overlay plots per driver.
    pub overlays: usize,
}

impl Default for ReportFlags {
    fn default() -> Self {
        Self { plots: true, overlays: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub models: Vec<Model>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub k: usize,
    pub extraction: ExtractionCriteria,
    pub sim: SimConfig,
    pub ga: GaOverrides,
    pub objective: ObjectiveConfig,
    pub observed: ObservedConfig,
    pub report: ReportFlags,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            models: vec![Model::Idm],
            data: None,
            out: None,
            k: 5,
            extraction: ExtractionCriteria::default(),
            sim: SimConfig::default(),
            ga: GaOverrides::default(),
            objective: ObjectiveConfig::default(),
            observed: ObservedConfig::default(),
            report: ReportFlags::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::InvalidArgument("no models configured".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be >= 1".into()));
        }
        self.extraction.validate()?;
        self.sim.substeps()?;
        if let Some(data) = &self.data {
            if !data.exists() {
                return Err(Error::io(data, std::io::Error::from(std::io::ErrorKind::NotFound)));
            }
        }
        for m in &self.models {
            self.ga.apply(*m).validate()?;
        }
        Ok(())
    }

    pub fn calibration(&self, model: Model) -> CalibrationConfig {
        CalibrationConfig { k: self.k, ga: self.ga.apply(model), sim: self.sim, objective: self.objective }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_gives_defaults() {
        assert_eq!(RunConfig::from_json_str("{}").unwrap(), RunConfig::default());
    }

    #[test]
    fn partial_ga_keeps_model_defaults() {
        let cfg = RunConfig::from_json_str(r#"{"models": ["w99", "idm"], "ga": {"n_restarts": 2}}"#).unwrap();
        let w = cfg.calibration(Model::W99).ga;
        assert_eq!((w.pop_size, w.max_generations, w.stall_generations, w.n_restarts), (500, 1300, 150, 2));
        let i = cfg.calibration(Model::Idm).ga;
        assert_eq!((i.pop_size, i.max_generations, i.n_restarts), (300, 300, 2));
    }

    #[test]
    fn nested_partial_sections() {
        let cfg = RunConfig::from_json_str(r#"{"extraction": {"max_gap": 100}, "sim": {"rng_seed": 9}}"#).unwrap();
        assert_eq!(cfg.extraction.max_gap, 100.0);
        assert_eq!(cfg.extraction.min_duration, 15.0);
        assert_eq!(cfg.sim.rng_seed, 9);
        assert_eq!(cfg.sim.dt, 0.1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_json_str(r#"{"models": ["xyz"]}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"k": 0}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"ga": {"pop": 3}}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"data": "/nonexistent/cflab"}"#).is_err());
        assert!(RunConfig::from_json_str(r#"{"sim": {"dt": 0.03}}"#).is_err());
    }
}
