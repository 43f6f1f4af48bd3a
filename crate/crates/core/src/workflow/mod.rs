//! Study procedures built on the simulator and the GA: k-fold calibration
//! and validation per driver, inter-driver transfer, synthetic recovery,
//! observed parameters and summary statistics.

mod observed;
mod synthetic;

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use observed::{
    differentiate, estimate_observed_idm, moving_average, percentile, AccelStatistic, ObservedConfig,
    ObservedCounts, ObservedIdmParams,
};
pub use synthetic::{
    piecewise_profile, random_lv_profile, seed_period, synthesize_period, synthetic_verify, synthetic_verify_with_progress, varied_lv_profile,
    SyntheticReport,
};

use crate::error::{Error, Result};
use crate::ga::{multistart_with_progress, GaConfig, GaResult, GenerationStats};
use crate::models::{Model, ModelParams};
use crate::objective::{error_report, pooled_objective, ErrorReport, ObjectiveConfig};
use crate::simulator::{period_seed, SimConfig};
use crate::trajectory::{CarFollowingPeriod, DriverDataset};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub driver_id: String,
    /// Period indices of each fold, ascending within a fold.
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    /// Indices outside fold `f`, ascending.
    pub fn calibration_indices(&self, f: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, fold)| fold.iter().copied())
            .collect();
        idx.sort_unstable();
        idx
    }
}

/// Random partition of `0..n` into `k` folds whose sizes differ by at most
/// one; the first `n % k` folds take the extra period.
pub fn kfold_split<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<FoldPlan> {
    if k == 0 || n < k {
        return Err(Error::InvalidArgument(format!("cannot split {n} periods into {k} folds")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut fold = idx[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(FoldPlan { driver_id: String::new(), folds })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    /// Number of folds; 1 calibrates and validates on the full set.
    pub k: usize,
    pub ga: GaConfig,
    pub sim: SimConfig,
    pub objective: ObjectiveConfig,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self { k: 5, ga: GaConfig::default(), sim: SimConfig::default(), objective: ObjectiveConfig::default() }
    }
}

/// One fold's calibration and validation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub driver_id: String,
    pub model: Model,
    pub fold: usize,
    pub genome: Vec<f64>,
    pub params: serde_json::Value,
    pub ga_fitness: f64,
    pub generations_run: usize,
    pub calibration_period_ids: Vec<String>,
    pub validation_period_ids: Vec<String>,
    pub calibration: ErrorReport,
    pub validation: ErrorReport,
}

impl FoldResult {
    pub fn model_params(&self) -> Result<ModelParams> {
        ModelParams::from_genome(self.model, &self.genome)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldAverages {
    pub calibration_rmspe: f64,
    pub validation_rmspe_spacing: f64,
    pub validation_rmspe_speed: f64,
    pub validation_collisions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub driver_id: String,
    pub model: Model,
    pub folds: Vec<FoldResult>,
    pub averages: FoldAverages,
}

impl CalibrationResult {
    pub fn from_folds(driver_id: &str, model: Model, mut folds: Vec<FoldResult>) -> Result<Self> {
        if folds.is_empty() {
            return Err(Error::Empty);
        }
        folds.sort_by_key(|f| f.fold);
        let n = folds.len() as f64;
        let avg = |f: fn(&FoldResult) -> f64| folds.iter().map(f).sum::<f64>() / n;
        let averages = FoldAverages {
            calibration_rmspe: avg(|f| f.calibration.rmspe_spacing),
            validation_rmspe_spacing: avg(|f| f.validation.rmspe_spacing),
            validation_rmspe_speed: avg(|f| f.validation.rmspe_speed),
            validation_collisions: folds.iter().map(|f| f.validation.collided_count).sum(),
        };
        Ok(Self { driver_id: driver_id.to_string(), model, folds, averages })
    }
}

/// Progress callback: fold, restart, generation statistics.
pub type Progress<'a> = &'a mut dyn FnMut(usize, usize, &GenerationStats);

/// Multistart GA over `bounds` on a fixed set of periods.
pub fn calibrate_periods(
    model: Model,
    bounds: &[(f64, f64)],
    periods: &[CarFollowingPeriod],
    ga: &GaConfig,
    sim: &SimConfig,
    obj: &ObjectiveConfig,
) -> Result<(ModelParams, GaResult)> {
    calibrate_periods_with_progress(model, bounds, periods, ga, sim, obj, &mut |_, _| {})
}

pub fn calibrate_periods_with_progress(
    model: Model,
    bounds: &[(f64, f64)],
    periods: &[CarFollowingPeriod],
    ga: &GaConfig,
    sim: &SimConfig,
    obj: &ObjectiveConfig,
    progress: &mut dyn FnMut(usize, &GenerationStats),
) -> Result<(ModelParams, GaResult)> {
    if periods.is_empty() {
        return Err(Error::Empty);
    }
    if bounds.len() != model.dim() {
        return Err(Error::LengthMismatch(bounds.len(), model.dim()));
    }
    let result = multistart_with_progress(
        |g: &[f64]| {
            let law = ModelParams::from_genome(model, g)?;
            pooled_objective(&law, periods, sim, obj)
        },
        bounds,
        ga,
        progress,
    )?;
    Ok((ModelParams::from_genome(model, &result.best_genome)?, result))
}

/// Seed of the GA for one fold of one driver.
pub fn fold_seed(seed: u64, driver_id: &str, fold: usize) -> u64 {
    period_seed(seed, &format!("{driver_id}/fold{fold}"))
}

/// The fold plan `calibrate_driver` uses for a dataset.
pub fn driver_fold_plan(dataset: &DriverDataset, k: usize, seed: u64) -> Result<FoldPlan> {
    let n = dataset.periods.len();
    let mut plan = if k == 1 {
        if n == 0 {
            return Err(Error::Empty);
        }
        FoldPlan { driver_id: String::new(), folds: vec![(0..n).collect()] }
    } else {
        kfold_split(n, k, &mut ChaCha8Rng::seed_from_u64(period_seed(seed, &dataset.driver_id)))?
    };
    plan.driver_id = dataset.driver_id.clone();
    Ok(plan)
}

fn pick(dataset: &DriverDataset, idx: &[usize]) -> Vec<CarFollowingPeriod> {
    idx.iter().map(|&i| dataset.periods[i].clone()).collect()
}

/// Calibrates one fold of `plan`: fit on the other folds, validate on this
/// one. With a single fold the two sets coincide.
pub fn calibrate_fold(
    model: Model,
    dataset: &DriverDataset,
    plan: &FoldPlan,
    fold: usize,
    cfg: &CalibrationConfig,
    progress: Progress,
) -> Result<FoldResult> {
    let val_idx = &plan.folds[fold];
    let cal_idx = if plan.k() == 1 { val_idx.clone() } else { plan.calibration_indices(fold) };
    let cal = pick(dataset, &cal_idx);
    let val = pick(dataset, val_idx);
    let ga = GaConfig { seed: fold_seed(cfg.ga.seed, &dataset.driver_id, fold), ..cfg.ga };
    let (params, result) = calibrate_periods_with_progress(
        model,
        &model.bounds(),
        &cal,
        &ga,
        &cfg.sim,
        &cfg.objective,
        &mut |r, s| progress(fold, r, s),
    )?;
    Ok(FoldResult {
        driver_id: dataset.driver_id.clone(),
        model,
        fold,
        genome: result.best_genome.clone(),
        params: params.to_json(),
        ga_fitness: result.best_fitness,
        generations_run: result.generations_run,
        calibration_period_ids: cal.iter().map(|p| p.period_id.clone()).collect(),
        validation_period_ids: val.iter().map(|p| p.period_id.clone()).collect(),
        calibration: error_report(&params, &cal, &cfg.sim, &cfg.objective)?,
        validation: error_report(&params, &val, &cfg.sim, &cfg.objective)?,
    })
}

/// k-fold calibration and validation of one driver.
pub fn calibrate_driver(model: Model, dataset: &DriverDataset, cfg: &CalibrationConfig) -> Result<CalibrationResult> {
    calibrate_driver_with_progress(model, dataset, cfg, &mut |_, _, _| {})
}

pub fn calibrate_driver_with_progress(
    model: Model,
    dataset: &DriverDataset,
    cfg: &CalibrationConfig,
    progress: Progress,
) -> Result<CalibrationResult> {
    let plan = driver_fold_plan(dataset, cfg.k, cfg.ga.seed)?;
    let mut folds = Vec::with_capacity(plan.k());
    for f in 0..plan.k() {
        folds.push(calibrate_fold(model, dataset, &plan, f, cfg, &mut *progress)?);
    }
    CalibrationResult::from_folds(&dataset.driver_id, model, folds)
}

/// Fit of a given parameter set on each fold's validation periods, for a
/// fold layout taken from earlier results.
pub fn evaluate_on_folds(
    params: &ModelParams,
    dataset: &DriverDataset,
    validation_ids: &[Vec<String>],
    sim: &SimConfig,
    obj: &ObjectiveConfig,
) -> Result<Vec<ErrorReport>> {
    validation_ids.iter().map(|ids| error_report(params, &periods_by_id(dataset, ids)?, sim, obj)).collect()
}

fn periods_by_id(dataset: &DriverDataset, ids: &[String]) -> Result<Vec<CarFollowingPeriod>> {
    ids.iter()
        .map(|id| {
            dataset.periods.iter().find(|p| &p.period_id == id).cloned().ok_or_else(|| {
                Error::InvalidArgument(format!("period {id} not found for driver {}", dataset.driver_id))
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterDriverMatrix {
    pub drivers: Vec<String>,
    /// `spacing[i][j]`: RMSPE of driver i's parameters on driver j's
    /// validation periods, averaged over folds.
    pub spacing: Vec<Vec<f64>>,
    pub speed: Vec<Vec<f64>>,
    pub collisions: usize,
}

impl InterDriverMatrix {
    fn split_mean(m: &[Vec<f64>]) -> (f64, f64) {
        let n = m.len();
        let diag: f64 = (0..n).map(|i| m[i][i]).sum::<f64>() / n as f64;
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| m[i][j]).sum::<f64>()
            / (n * (n - 1)) as f64;
        (diag, off)
    }

    /// Mean of the diagonal and of the off-diagonal spacing errors.
    pub fn spacing_means(&self) -> (f64, f64) {
        Self::split_mean(&self.spacing)
    }

    pub fn speed_means(&self) -> (f64, f64) {
        Self::split_mean(&self.speed)
    }
}

/// Applies every driver's fold-f parameters to every driver's fold-f
/// validation periods. `results[i]` must belong to `datasets[i]`.
pub fn inter_driver_matrix(
    results: &[CalibrationResult],
    datasets: &[DriverDataset],
    sim: &SimConfig,
    obj: &ObjectiveConfig,
) -> Result<InterDriverMatrix> {
    let n = results.len();
    if n < 2 {
        return Err(Error::InvalidArgument("inter-driver validation needs at least two drivers".into()));
    }
    if datasets.len() != n {
        return Err(Error::LengthMismatch(datasets.len(), n));
    }
    let k = results[0].folds.len();
    for (r, d) in results.iter().zip(datasets) {
        if r.driver_id != d.driver_id {
            return Err(Error::InvalidArgument(format!("result for {} paired with data of {}", r.driver_id, d.driver_id)));
        }
        if r.folds.len() != k {
            return Err(Error::InvalidArgument(format!("driver {} has {} folds, expected {k}", r.driver_id, r.folds.len())));
        }
    }
    let mut spacing = vec![vec![0.0; n]; n];
    let mut speed = vec![vec![0.0; n]; n];
    let mut collisions = 0;
    for (i, src) in results.iter().enumerate() {
        for (j, (dst, data)) in results.iter().zip(datasets).enumerate() {
            for f in 0..k {
                let params = src.folds[f].model_params()?;
                let val = periods_by_id(data, &dst.folds[f].validation_period_ids)?;
                let rep = error_report(&params, &val, sim, obj)?;
                spacing[i][j] += rep.rmspe_spacing;
                speed[i][j] += rep.rmspe_speed;
                collisions += rep.collided_count;
            }
            spacing[i][j] /= k as f64;
            speed[i][j] /= k as f64;
        }
    }
    Ok(InterDriverMatrix { drivers: results.iter().map(|r| r.driver_id.clone()).collect(), spacing, speed, collisions })
}

/// Pearson product-moment correlation.
pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least two pairs".into()));
    }
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Sample standard deviation; 0 for a single value.
pub fn sample_std(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub unit: String,
    pub mean: f64,
    pub median: f64,
    pub std: f64,
    pub p5: f64,
    pub p95: f64,
    /// Mean over drivers of the spread across that driver's folds.
    pub intra_driver_std: f64,
    /// Spread across drivers of their fold-averaged values.
    pub inter_driver_std: f64,
    pub n: usize,
}

/// Statistics of every parameter over all drivers and folds, in the
/// model's parameter order.
pub fn summarize_params(results: &[CalibrationResult]) -> Result<Vec<ParamSummary>> {
    let first = results.first().ok_or(Error::Empty)?;
    let model = first.model;
    if let Some(r) = results.iter().find(|r| r.model != model) {
        return Err(Error::InvalidArgument(format!("mixed models {model} and {}", r.model)));
    }
    let mut rows = Vec::with_capacity(model.dim());
    for (d, spec) in model.params().iter().enumerate() {
        let all: Vec<f64> = results.iter().flat_map(|r| r.folds.iter().map(move |f| f.genome[d])).collect();
        let per_driver: Vec<Vec<f64>> = results.iter().map(|r| r.folds.iter().map(|f| f.genome[d]).collect()).collect();
        let means: Vec<f64> = per_driver.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
        let intra = per_driver.iter().map(|v| sample_std(v)).sum::<f64>() / per_driver.len() as f64;
        rows.push(ParamSummary {
            name: spec.name.to_string(),
            unit: spec.unit.to_string(),
            mean: all.iter().sum::<f64>() / all.len() as f64,
            median: percentile(&all, 50.0).ok_or(Error::Empty)?,
            std: sample_std(&all),
            p5: percentile(&all, 5.0).ok_or(Error::Empty)?,
            p95: percentile(&all, 95.0).ok_or(Error::Empty)?,
            intra_driver_std: intra,
            inter_driver_std: sample_std(&means),
            n: all.len(),
        });
    }
    Ok(rows)
}

/// `results/<model>/<driver>/fold<k>.json`, with k counted from 1.
pub fn fold_path(model_dir: &Path, driver_id: &str, fold: usize) -> PathBuf {
    model_dir.join(driver_id).join(format!("fold{}.json", fold + 1))
}

pub fn write_calibration_result(model_dir: &Path, result: &CalibrationResult) -> Result<()> {
    for f in &result.folds {
        let path = fold_path(model_dir, &result.driver_id, f.fold);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut text = serde_json::to_string_pretty(f)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Reads every `<driver>/fold*.json` under `model_dir`, drivers sorted by id.
pub fn load_calibration_results(model_dir: &Path) -> Result<Vec<CalibrationResult>> {
    let mut drivers: Vec<PathBuf> = fs::read_dir(model_dir)
        .map_err(|e| Error::io(model_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    drivers.sort();
    let mut out = Vec::new();
    for dir in drivers {
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                name.starts_with("fold") && name.ends_with(".json")
            })
            .collect();
        files.sort();
        if files.is_empty() {
            continue;
        }
        let mut folds = Vec::with_capacity(files.len());
        for f in &files {
            let text = fs::read_to_string(f).map_err(|e| Error::io(f, e))?;
            folds.push(serde_json::from_str::<FoldResult>(&text)?);
        }
        let driver = folds[0].driver_id.clone();
        let model = folds[0].model;
        out.push(CalibrationResult::from_folds(&driver, model, folds)?);
    }
    Ok(out)
}
