//! C ABI for cflab.
//!
//! Objects cross the boundary as opaque handles that the caller frees with
//! the matching `*_free` function. Every fallible call returns a
//! [`CflabStatus`]; on failure [`cflab_last_error`] describes what went
//! wrong on the calling thread. Outputs are written only on success.
//!
//! Models are passed as the `CFLAB_MODEL_*` codes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cflab::ga::GaConfig;
use cflab::models::{Model, ModelParams};
use cflab::objective::{pooled_objective, rmspe, Aggregation, ObjectiveConfig};
use cflab::simulator::{simulate_period, RndMode, SimConfig, SimResult};
use cflab::trajectory::{load_period, CarFollowingPeriod, TrajectorySample, DEFAULT_LV_LENGTH, SAMPLE_DT};
use cflab::workflow::calibrate_periods;

pub const CFLAB_MODEL_GHR: u32 = 0;
pub const CFLAB_MODEL_GIPPS: u32 = 1;
pub const CFLAB_MODEL_IDM: u32 = 2;
pub const CFLAB_MODEL_FVD: u32 = 3;
pub const CFLAB_MODEL_W99: u32 = 4;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CflabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Computation = 4,
    Panic = 5,
}

/// One car-following period.
pub struct CflabPeriod(CarFollowingPeriod);

/// Parameters of one model.
pub struct CflabParams(ModelParams);

/// Simulated follower of one period.
pub struct CflabSimResult(SimResult);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CflabSimOptions {
    /// Integration step in seconds; must divide 0.1.
    pub dt: f64,
    /// A gap at or below this counts as a collision.
    pub collision_threshold: f64,
    /// Seed of the W99 random stream.
    pub rng_seed: u64,
    /// Non-zero freezes the W99 random term at 0.
    pub w99_frozen_rnd: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CflabObjectiveOptions {
    /// Added per collided period.
    pub penalty: f64,
    /// Non-zero averages per-period RMSPEs instead of pooling the sums.
    pub per_period_mean: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CflabGaOptions {
    pub pop_size: usize,
    pub max_generations: usize,
    pub stall_generations: usize,
    pub function_tolerance: f64,
    pub n_restarts: usize,
    pub seed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(CflabStatus, String);

impl From<cflab::Error> for Failure {
    fn from(e: cflab::Error) -> Self {
        let status = match &e {
            cflab::Error::Io { .. } => CflabStatus::Io,
            e if e.is_input_error() => CflabStatus::InvalidArgument,
            _ => CflabStatus::Computation,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(CflabStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(CflabStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CflabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            CflabStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            CflabStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn out<T>(p: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

fn model(code: u32) -> Result<Model, Failure> {
    Model::ALL.get(code as usize).copied().ok_or_else(|| invalid(format!("unknown model code {code}")))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn periods_arg(periods: *const *const CflabPeriod, n: usize) -> Result<Vec<CarFollowingPeriod>, Failure> {
    if n == 0 {
        return Err(invalid("no periods"));
    }
    if periods.is_null() {
        return Err(null("periods"));
    }
    std::slice::from_raw_parts(periods, n).iter().map(|&p| Ok(get(p, "period")?.0.clone())).collect()
}

impl CflabSimOptions {
    fn to_config(self) -> SimConfig {
        SimConfig {
            dt: self.dt,
            collision_threshold: self.collision_threshold,
            rng_seed: self.rng_seed,
            w99_rnd_mode: if self.w99_frozen_rnd != 0 { RndMode::FrozenZero } else { RndMode::PerStep },
        }
    }
}

unsafe fn sim_arg(opts: *const CflabSimOptions) -> SimConfig {
    opts.as_ref().map(|o| o.to_config()).unwrap_or_default()
}

unsafe fn obj_arg(opts: *const CflabObjectiveOptions) -> ObjectiveConfig {
    match opts.as_ref() {
        None => ObjectiveConfig::default(),
        Some(o) => ObjectiveConfig {
            penalty: o.penalty,
            aggregation: if o.per_period_mean != 0 { Aggregation::MeanOfPeriods } else { Aggregation::Pooled },
        },
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cflab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn cflab_sim_options_default() -> CflabSimOptions {
    let d = SimConfig::default();
    CflabSimOptions { dt: d.dt, collision_threshold: d.collision_threshold, rng_seed: d.rng_seed, w99_frozen_rnd: 0 }
}

#[no_mangle]
pub extern "C" fn cflab_objective_options_default() -> CflabObjectiveOptions {
    CflabObjectiveOptions { penalty: ObjectiveConfig::default().penalty, per_period_mean: 0 }
}

/// Defaults for `model`; an unknown code gives the GHR/Gipps/IDM/FVD ones.
#[no_mangle]
pub extern "C" fn cflab_ga_options_default(model_code: u32) -> CflabGaOptions {
    let g = model(model_code).map(GaConfig::for_model).unwrap_or_default();
    CflabGaOptions {
        pop_size: g.pop_size,
        max_generations: g.max_generations,
        stall_generations: g.stall_generations,
        function_tolerance: g.function_tolerance,
        n_restarts: g.n_restarts,
        seed: g.seed,
    }
}

/// Loads a period CSV (with its optional JSON sidecar).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_period` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cflab_period_load(path: *const c_char, out_period: *mut *mut CflabPeriod) -> CflabStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let p = load_period(Path::new(path))?;
        out(out_period, Box::into_raw(Box::new(CflabPeriod(p))), "out_period")
    })
}

/// Builds a period from `n` samples at 10 Hz. `lv_length <= 0` uses the
/// default leader length.
///
/// # Safety
/// The three arrays must hold `n` values each.
#[no_mangle]
pub unsafe extern "C" fn cflab_period_from_arrays(
    fv_speed: *const f64,
    gap: *const f64,
    lv_speed: *const f64,
    n: usize,
    lv_length: f64,
    out_period: *mut *mut CflabPeriod,
) -> CflabStatus {
    guard(|| {
        if n < 2 {
            return Err(invalid(format!("a period needs at least 2 samples, got {n}")));
        }
        let (v, g, l) = (slice(fv_speed, n, "fv_speed")?, slice(gap, n, "gap")?, slice(lv_speed, n, "lv_speed")?);
        if let Some(x) = v.iter().chain(l).find(|x| !(**x >= 0.0)) {
            return Err(invalid(format!("speeds must be finite and non-negative, got {x}")));
        }
        if let Some(x) = g.iter().find(|x| !x.is_finite()) {
            return Err(invalid(format!("gaps must be finite, got {x}")));
        }
        let lv_length = if lv_length > 0.0 { lv_length } else { DEFAULT_LV_LENGTH };
        let samples = (0..n)
            .map(|k| TrajectorySample {
                t: k as f64 * SAMPLE_DT,
                fv_speed: v[k],
                gap: g[k],
                lv_speed: l[k],
                lv_id: 1,
                lateral_offset: 0.0,
                lv_length: Some(lv_length),
            })
            .collect();
        let p = CarFollowingPeriod { driver_id: "ffi".into(), period_id: "ffi".into(), samples, lv_length };
        out(out_period, Box::into_raw(Box::new(CflabPeriod(p))), "out_period")
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `period` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cflab_period_len(period: *const CflabPeriod) -> usize {
    period.as_ref().map_or(0, |p| p.0.samples.len())
}

/// # Safety
/// `period` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cflab_period_free(period: *mut CflabPeriod) {
    if !period.is_null() {
        drop(Box::from_raw(period));
    }
}

/// Reference median parameters of a model.
///
/// # Safety
/// `out_params` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cflab_params_median(model_code: u32, out_params: *mut *mut CflabParams) -> CflabStatus {
    guard(|| {
        let p = ModelParams::median(model(model_code)?);
        out(out_params, Box::into_raw(Box::new(CflabParams(p))), "out_params")
    })
}

/// Parameters from a genome in the model's field order; checked against
/// the calibration bounds.
///
/// # Safety
/// `genome` must hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn cflab_params_from_genome(
    model_code: u32,
    genome: *const f64,
    len: usize,
    out_params: *mut *mut CflabParams,
) -> CflabStatus {
    guard(|| {
        let p = ModelParams::from_genome(model(model_code)?, slice(genome, len, "genome")?)?;
        p.check_bounds()?;
        out(out_params, Box::into_raw(Box::new(CflabParams(p))), "out_params")
    })
}

/// Parameters from a JSON object keyed by field name; checked against the
/// calibration bounds.
///
/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cflab_params_from_json(
    model_code: u32,
    json: *const c_char,
    out_params: *mut *mut CflabParams,
) -> CflabStatus {
    guard(|| {
        let value: serde_json::Value =
            serde_json::from_str(str_arg(json, "json")?).map_err(|e| invalid(format!("json: {e}")))?;
        let p = ModelParams::from_json(model(model_code)?, &value)?;
        p.check_bounds()?;
        out(out_params, Box::into_raw(Box::new(CflabParams(p))), "out_params")
    })
}

/// Model code of the parameters, or `UINT32_MAX` for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cflab_params_model(params: *const CflabParams) -> u32 {
    match params.as_ref() {
        Some(p) => Model::ALL.iter().position(|m| *m == p.0.model()).unwrap_or(0) as u32,
        None => u32::MAX,
    }
}

/// Number of parameters, or 0 for a null handle.
///
/// # Safety
/// `params` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cflab_params_dim(params: *const CflabParams) -> usize {
    params.as_ref().map_or(0, |p| p.0.model().dim())
}

/// Copies the genome into `buf`, which must hold `cflab_params_dim` values.
///
/// # Safety
/// `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn cflab_params_genome(params: *const CflabParams, buf: *mut f64, len: usize) -> CflabStatus {
    guard(|| {
        let g = get(params, "params")?.0.genome();
        copy_out(&g, buf, len)
    })
}

/// JSON object keyed by field name. Free with `cflab_string_free`.
///
/// # Safety
/// `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cflab_params_to_json(params: *const CflabParams, out_json: *mut *mut c_char) -> CflabStatus {
    guard(|| {
        let text = get(params, "params")?.0.to_json().to_string();
        let c = CString::new(text).map_err(|e| invalid(e.to_string()))?;
        out(out_json, c.into_raw(), "out_json")
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn cflab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `params` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cflab_params_free(params: *mut CflabParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Replays `period` with `params`. `opts` may be null for the defaults.
///
/// # Safety
/// Handles must be live; `out_result` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cflab_simulate(
    params: *const CflabParams,
    period: *const CflabPeriod,
    opts: *const CflabSimOptions,
    out_result: *mut *mut CflabSimResult,
) -> CflabStatus {
    guard(|| {
        let r = simulate_period(&get(params, "params")?.0, &get(period, "period")?.0, &sim_arg(opts))?;
        out(out_result, Box::into_raw(Box::new(CflabSimResult(r))), "out_result")
    })
}

/// Number of simulated samples, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cflab_sim_result_len(result: *const CflabSimResult) -> usize {
    result.as_ref().map_or(0, |r| r.0.t.len())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Failure> {
    if len < src.len() {
        return Err(invalid(format!("buffer holds {len} values, need {}", src.len())));
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

/// Copies the simulated gaps (m) into `buf`.
///
/// # Safety
/// `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn cflab_sim_result_gap(result: *const CflabSimResult, buf: *mut f64, len: usize) -> CflabStatus {
    guard(|| copy_out(&get(result, "result")?.0.sim_gap, buf, len))
}

/// Copies the simulated follower speeds (m/s) into `buf`.
///
/// # Safety
/// `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn cflab_sim_result_speed(result: *const CflabSimResult, buf: *mut f64, len: usize) -> CflabStatus {
    guard(|| copy_out(&get(result, "result")?.0.sim_fv_speed, buf, len))
}

/// Copies the accelerations (m/s²) into `buf`.
///
/// # Safety
/// `buf` must be writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn cflab_sim_result_accel(result: *const CflabSimResult, buf: *mut f64, len: usize) -> CflabStatus {
    guard(|| copy_out(&get(result, "result")?.0.accel, buf, len))
}

/// Writes 1 to `collided` if the gap closed, else 0, and the collision
/// time to `time` (NaN without a collision). `time` may be null.
///
/// # Safety
/// `collided` must be writable; `time` null or writable.
#[no_mangle]
pub unsafe extern "C" fn cflab_sim_result_collision(
    result: *const CflabSimResult,
    collided: *mut i32,
    time: *mut f64,
) -> CflabStatus {
    guard(|| {
        let r = &get(result, "result")?.0;
        out(collided, r.collided as i32, "collided")?;
        if !time.is_null() {
            time.write(r.collision_time.unwrap_or(f64::NAN));
        }
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cflab_sim_result_free(result: *mut CflabSimResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Root mean square percentage error of `sim` against `obs`.
///
/// # Safety
/// Both arrays must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn cflab_rmspe(sim: *const f64, obs: *const f64, n: usize, out_value: *mut f64) -> CflabStatus {
    guard(|| {
        let v = rmspe(slice(sim, n, "sim")?, slice(obs, n, "obs")?)?;
        out(out_value, v, "out_value")
    })
}

/// Calibration objective of `params` over `n` periods: spacing RMSPE plus
/// the penalty per collided period. Options may be null.
///
/// # Safety
/// `periods` must hold `n` live handles.
#[no_mangle]
pub unsafe extern "C" fn cflab_objective(
    params: *const CflabParams,
    periods: *const *const CflabPeriod,
    n: usize,
    sim: *const CflabSimOptions,
    obj: *const CflabObjectiveOptions,
    out_value: *mut f64,
) -> CflabStatus {
    guard(|| {
        let data = periods_arg(periods, n)?;
        let v = pooled_objective(&get(params, "params")?.0, &data, &sim_arg(sim), &obj_arg(obj))?;
        out(out_value, v, "out_value")
    })
}

/// Multistart GA calibration of `model_code` over the full parameter box
/// on `n` periods. Options may be null for the defaults.
///
/// # Safety
/// `periods` must hold `n` live handles; outputs must be writable
/// (`out_fitness` may be null).
#[no_mangle]
pub unsafe extern "C" fn cflab_calibrate(
    model_code: u32,
    periods: *const *const CflabPeriod,
    n: usize,
    ga: *const CflabGaOptions,
    sim: *const CflabSimOptions,
    obj: *const CflabObjectiveOptions,
    out_params: *mut *mut CflabParams,
    out_fitness: *mut f64,
) -> CflabStatus {
    guard(|| {
        let m = model(model_code)?;
        let data = periods_arg(periods, n)?;
        let mut cfg = GaConfig::for_model(m);
        if let Some(g) = ga.as_ref() {
            cfg.pop_size = g.pop_size;
            cfg.max_generations = g.max_generations;
            cfg.stall_generations = g.stall_generations;
            cfg.function_tolerance = g.function_tolerance;
            cfg.n_restarts = g.n_restarts;
            cfg.seed = g.seed;
        }
        cfg.validate()?;
        if out_params.is_null() {
            return Err(null("out_params"));
        }
        let (p, r) = calibrate_periods(m, &m.bounds(), &data, &cfg, &sim_arg(sim), &obj_arg(obj))?;
        if !out_fitness.is_null() {
            out_fitness.write(r.best_fitness);
        }
        out(out_params, Box::into_raw(Box::new(CflabParams(p))), "out_params")
    })
}
