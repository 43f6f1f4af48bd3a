//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! fails. `CFLAB_ACCEPTANCE_ONLY=1,5` runs a subset.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cflab::ga::{evolve, multistart_runs, GaConfig};
use cflab::models::{GhrParams, IdmParams, Model, ModelError, ModelInput, ModelParams};
use cflab::objective::{rmse, rmspe, ObjectiveConfig};
use cflab::simulator::{simulate_period, FollowerLaw, LawOutput, SimConfig, SimResult};
use cflab::trajectory::{extract_periods, extract_runs, CarFollowingPeriod, DriverDataset, ExtractionCriteria, TrajectorySample};
use cflab::workflow::{
    calibrate_driver, calibrate_periods, driver_fold_plan, estimate_observed_idm, inter_driver_matrix, kfold_split,
    pearson_correlation, piecewise_profile, random_lv_profile, seed_period, synthesize_period, synthetic_verify,
    varied_lv_profile, CalibrationConfig, ObservedConfig,
};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn synthetic_seed() -> CarFollowingPeriod {
    seed_period("synthetic", "synthetic_000", &varied_lv_profile(), 25.0)
}

/// Recovered parameters carried from criterion 2 into criterion 3.
#[derive(Default)]
struct Shared {
    recovered: Vec<ModelParams>,
}

fn c1_ghr_recovery(_: &mut Shared) -> Outcome {
    let start = Instant::now();
    let truth = ModelParams::Ghr(GhrParams { alpha: 1.0, beta: 1.0, gamma: 1.0, tau: 1.0 });
    let r = ok(synthetic_verify(
        &truth,
        &synthetic_seed(),
        &GaConfig::for_model(Model::Ghr),
        &SimConfig::default(),
        &ObjectiveConfig::default(),
        false,
    ))?;
    let secs = start.elapsed().as_secs_f64();
    let g = r.recovered_params.genome();
    let detail = format!(
        "RMSPE {:.5}, recovered alpha {:.3} beta {:.3} gamma {:.3} tau {:.2}, {secs:.0} s",
        r.rmspe, g[0], g[1], g[2], g[3]
    );
    ensure!(r.rmspe <= 0.01, "{detail}");
    ensure!(secs <= 300.0, "{detail}: over 5 min");
    Ok(detail)
}

fn c2_all_models(shared: &mut Shared) -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut failed = false;
    for model in Model::ALL {
        let r = ok(synthetic_verify(
            &ModelParams::median(model),
            &synthetic_seed(),
            &GaConfig::for_model(model),
            &SimConfig::default(),
            &ObjectiveConfig::default(),
            false,
        ))?;
        failed |= r.rmspe > 0.02 || r.report.collided_count > 0;
        parts.push(format!("{model} {:.4}/{}", r.rmspe, r.report.collided_count));
        shared.recovered.push(r.recovered_params);
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!("RMSPE/collisions: {}; {secs:.0} s", parts.join(", "));
    ensure!(!failed, "{detail}");
    ensure!(secs <= 1800.0, "{detail}: over 30 min");
    Ok(detail)
}

/// Independent GHR replay: Euler steps at 0.1 s, inputs delayed by whole
/// steps. Valid up to the first non-positive gap.
fn ghr_oracle(p: &GhrParams, period: &CarFollowingPeriod) -> Vec<f64> {
    let dt = 0.1;
    let delay = (p.tau / dt).round() as usize;
    let s = &period.samples;
    let mut x_obs = vec![0.0];
    for k in 1..s.len() {
        x_obs.push(x_obs[k - 1] + s[k - 1].fv_speed * (s[k].t - s[k - 1].t));
    }
    let (mut x, mut v) = (0.0, s[0].fv_speed);
    let mut hist: Vec<(f64, f64, f64)> = Vec::new();
    let mut gaps = Vec::new();
    for k in 0..s.len() {
        let gap = x_obs[k] + s[k].gap - x;
        gaps.push(gap);
        if gap <= 0.0 {
            break;
        }
        hist.push((v, s[k].lv_speed, gap + period.lv_length));
        let (vf, vl, dx) = hist[k.saturating_sub(delay)];
        let a = p.alpha * v.powf(p.beta) * (vl - vf) / dx.powf(p.gamma);
        x += v * dt;
        v = (v + a * dt).max(0.0);
    }
    gaps
}

fn c3_collisions(shared: &mut Shared) -> Outcome {
    // 10 s cruise at 15 m/s, brake at 3 m/s² to a stop, stand for 10 s
    let lv = piecewise_profile(15.0, &[(10.0, 0.0), (5.0, -3.0), (10.0, 0.0)]);
    let hard_stop = seed_period("hardstop", "hardstop_000", &lv, 30.0);
    let sim = SimConfig::default();
    let mut parts = Vec::new();
    for model in [Model::Idm, Model::Gipps] {
        let params = match shared.recovered.iter().find(|p| p.model() == model) {
            Some(p) => *p,
            None => {
                let r = ok(synthetic_verify(
                    &ModelParams::median(model),
                    &synthetic_seed(),
                    &GaConfig::for_model(model),
                    &sim,
                    &ObjectiveConfig::default(),
                    false,
                ))?;
                r.recovered_params
            }
        };
        let r = ok(simulate_period(&params, &hard_stop, &sim))?;
        let min_gap = r.sim_gap.iter().copied().fold(f64::INFINITY, f64::min);
        ensure!(!r.collided && min_gap > 0.0, "{model} collided (min gap {min_gap:.3} m)");
        parts.push(format!("{model} min gap {min_gap:.2} m"));
    }

    // weak, slow GHR follower: barely reacts, three seconds late
    let unstable = GhrParams { alpha: 0.1, beta: 0.0, gamma: 0.0, tau: 3.0 };
    let r = ok(simulate_period(&ModelParams::Ghr(unstable), &hard_stop, &sim))?;
    let oracle = ghr_oracle(&unstable, &hard_stop);
    let cross = oracle.len() - 1;
    ensure!(*oracle.last().unwrap() <= 0.0, "oracle follower never reached the leader");
    for (k, (a, b)) in r.sim_gap.iter().zip(&oracle).enumerate() {
        ensure!((a - b).abs() < 1e-9, "GHR gap differs from oracle at sample {k}: {a} vs {b}");
    }
    ensure!(r.collided, "collision detector did not fire");
    ensure!(r.collision_time == Some(hard_stop.samples[cross].t), "collision time {:?}, oracle {}", r.collision_time, hard_stop.samples[cross].t);
    parts.push(format!("unstable GHR collides at t = {:.1} s as the oracle predicts", hard_stop.samples[cross].t));
    Ok(parts.join("; "))
}

fn c4_objective_oracle(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let obs: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..100.0)).collect();
        let sim: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let mut sq = 0.0;
        let mut o2 = 0.0;
        for i in 0..n {
            sq += (sim[i] - obs[i]) * (sim[i] - obs[i]);
            o2 += obs[i] * obs[i];
        }
        let want_rmse = (sq / n as f64).sqrt();
        let want_rmspe = (sq / o2).sqrt();
        let got_rmse = ok(rmse(&sim, &obs))?;
        let got_rmspe = ok(rmspe(&sim, &obs))?;
        ensure!(close(got_rmse, want_rmse, 1e-12), "rmse {got_rmse} vs {want_rmse}");
        ensure!(close(got_rmspe, want_rmspe, 1e-12), "rmspe {got_rmspe} vs {want_rmspe}");
        worst = worst.max((got_rmse - want_rmse).abs()).max((got_rmspe - want_rmspe).abs());
    }
    for _ in 0..100 {
        let n = rng.random_range(1..200);
        let obs: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..100.0)).collect();
        let sim: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..100.0)).collect();
        let c = 10f64.powf(rng.random_range(-3.0..3.0));
        let scaled = |x: &[f64]| x.iter().map(|v| v * c).collect::<Vec<_>>();
        let base = ok(rmspe(&sim, &obs))?;
        let s = ok(rmspe(&scaled(&sim), &scaled(&obs)))?;
        ensure!(close(s, base, 1e-12), "scale {c}: {s} vs {base}");
    }
    Ok(format!("1000 pairs, max deviation {worst:.1e}; 100 scale factors invariant"))
}

fn sphere(x: &[f64]) -> cflab::Result<f64> {
    Ok(x.iter().map(|v| v * v).sum())
}

fn c5_ga_sanity(_: &mut Shared) -> Outcome {
    let cfg = GaConfig::default();
    let mut parts = Vec::new();
    for d in [3, 6] {
        let bounds = vec![(-5.12, 5.12); d];
        let r = ok(evolve(sphere, &bounds, &cfg))?;
        ensure!(r.best_fitness < 1e-3, "{d}-D sphere best {}", r.best_fitness);
        ensure!(r.generations_run <= 300, "{d}-D ran {} generations", r.generations_run);
        parts.push(format!("{d}-D best {:.1e} in {} generations", r.best_fitness, r.generations_run));

        let mut runs = ok(multistart_runs(sphere, &bounds, &cfg))?;
        runs.push(r);
        for run in &runs {
            ensure!(
                run.fitness_history.windows(2).all(|w| w[1] <= w[0]),
                "best fitness rose in run with seed {}",
                run.seed
            );
        }
    }
    let cfg = GaConfig { seed: 17, ..cfg };
    let bounds = vec![(-5.12, 5.12); 6];
    let a = ok(serde_json::to_vec(&ok(evolve(sphere, &bounds, &cfg))?))?;
    let b = ok(serde_json::to_vec(&ok(evolve(sphere, &bounds, &cfg))?))?;
    ensure!(a == b, "GaResult differs between runs with the same seed");
    parts.push("elitism holds on 26 runs; seeded result byte-identical".into());
    Ok(parts.join("; "))
}

/// Constant acceleration regardless of the input.
struct ConstAccel(f64);

impl FollowerLaw for ConstAccel {
    fn evaluate(&self, _: &ModelInput, _: f64, _: f64) -> Result<LawOutput, ModelError> {
        Ok(LawOutput { accel: self.0, regime: None })
    }
}

fn bits(r: &SimResult) -> Vec<u64> {
    r.sim_gap.iter().chain(&r.sim_fv_speed).chain(&r.accel).map(|x| x.to_bits()).collect()
}

fn c6_kinematics(_: &mut Shared) -> Outcome {
    let sim = SimConfig::default();
    let a = 0.01;
    let mut period = seed_period("k", "k_000", &vec![20.0; 1001], 50.0);
    for s in &mut period.samples {
        s.fv_speed = 10.0;
    }
    let r = ok(simulate_period(&ConstAccel(a), &period, &sim))?;
    ensure!(r.sim_gap.len() == 1001, "{} samples", r.sim_gap.len());
    // leader position is the recorded follower's plus the recorded gap
    let (mut x, mut v, mut x_obs) = (0.0, 10.0, 0.0);
    let mut worst: f64 = 0.0;
    for k in 0..=1000 {
        let gap = x_obs + 50.0 - x;
        worst = worst.max((r.sim_gap[k] - gap).abs()).max((r.sim_fv_speed[k] - v).abs());
        ensure!(
            (r.sim_gap[k] - gap).abs() <= 1e-12 * gap.abs().max(1.0) && (r.sim_fv_speed[k] - v).abs() <= 1e-12,
            "step {k}: gap {} vs {gap}, speed {} vs {v}",
            r.sim_gap[k],
            r.sim_fv_speed[k]
        );
        x += v * 0.1;
        v += a * 0.1;
        x_obs += 10.0 * ((k + 1) as f64 * 0.1 - k as f64 * 0.1);
    }

    let mut stop = seed_period("k", "k_001", &[10.0; 5], 20.0);
    stop.samples[0].fv_speed = 0.05;
    let r = ok(simulate_period(&ConstAccel(-2.0), &stop, &sim))?;
    ensure!(r.sim_fv_speed[1] == 0.0, "v after braking from 0.05 m/s: {}", r.sim_fv_speed[1]);
    ensure!(r.sim_fv_speed.iter().all(|&v| v >= 0.0), "negative speed");

    let seed = synthetic_seed();
    for model in Model::ALL {
        let p = ModelParams::median(model);
        let (x, y) = (ok(simulate_period(&p, &seed, &sim))?, ok(simulate_period(&p, &seed, &sim))?);
        ensure!(bits(&x) == bits(&y) && x.regime == y.regime, "{model} not deterministic");
    }
    Ok(format!("1000 steps, max deviation {worst:.1e}; 0.05 m/s at -2 m/s² clamps to 0; all five laws bit-exact on rerun"))
}

/// Pooled spacing RMSPE of `params` over `periods`, from raw simulations.
fn pooled(params: &ModelParams, periods: &[&CarFollowingPeriod], sim: &SimConfig) -> (f64, usize) {
    let (mut sq, mut o2, mut hits) = (0.0, 0.0, 0);
    for p in periods {
        let r = simulate_period(params, p, sim).unwrap();
        for (s, o) in r.sim_gap.iter().zip(p.samples.iter()) {
            sq += (s - o.gap).powi(2);
            o2 += o.gap * o.gap;
        }
        hits += r.collided as usize;
    }
    ((sq / o2).sqrt(), hits)
}

fn idm_with(t_des: f64) -> ModelParams {
    let m = ModelParams::median(Model::Idm);
    let ModelParams::Idm(p) = m else { unreachable!() };
    ModelParams::Idm(IdmParams { t_des, ..p })
}

/// `n` periods of `secs` seconds behind random leaders, followed by `law`.
fn synthetic_driver(driver: &str, law: &ModelParams, n: usize, secs: usize, seed: u64) -> DriverDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let periods = (0..n)
        .map(|i| {
            let v0 = rng.random_range(12.0..20.0);
            let lv = random_lv_profile(&mut rng, secs * 10, v0, 25.0);
            let s = seed_period(driver, &format!("{driver}_{i:03}"), &lv, 25.0);
            synthesize_period(law, &s, &SimConfig::default()).unwrap()
        })
        .collect();
    DriverDataset::new(driver, periods).unwrap()
}

fn c7_cross_validation(_: &mut Shared) -> Outcome {
    for seed in 0..100 {
        let plan = ok(kfold_split(50, 5, &mut ChaCha8Rng::seed_from_u64(seed)))?;
        ensure!(plan.folds.len() == 5, "seed {seed}: {} folds", plan.folds.len());
        let mut seen = BTreeSet::new();
        for f in &plan.folds {
            ensure!(f.len() == 10, "seed {seed}: fold of {}", f.len());
            for &i in f {
                ensure!(seen.insert(i), "seed {seed}: period {i} in two folds");
            }
        }
        ensure!(seen == (0..50).collect(), "seed {seed}: folds do not cover 0..50");
    }

    let data = synthetic_driver("cv", &ModelParams::median(Model::Idm), 10, 20, 7);
    let cfg = CalibrationConfig {
        k: 5,
        ga: GaConfig { pop_size: 20, max_generations: 10, n_restarts: 1, ..GaConfig::default() },
        ..Default::default()
    };
    let r = ok(calibrate_driver(Model::Idm, &data, &cfg))?;
    let plan = ok(driver_fold_plan(&data, 5, cfg.ga.seed))?;
    let (mut cal, mut val_s, mut hits) = (0.0, 0.0, 0);
    for (f, fold) in r.folds.iter().enumerate() {
        let params = ok(fold.model_params())?;
        let val: Vec<&CarFollowingPeriod> = plan.folds[f].iter().map(|&i| &data.periods[i]).collect();
        let train: Vec<&CarFollowingPeriod> = (0..10).filter(|i| !plan.folds[f].contains(i)).map(|i| &data.periods[i]).collect();
        ensure!(
            fold.validation_period_ids == val.iter().map(|p| p.period_id.clone()).collect::<Vec<_>>(),
            "fold {f} validates on the wrong periods"
        );
        let (c, _) = pooled(&params, &train, &cfg.sim);
        let (v, h) = pooled(&params, &val, &cfg.sim);
        ensure!(close(fold.calibration.rmspe_spacing, c, 1e-12), "fold {f} calibration {} vs {c}", fold.calibration.rmspe_spacing);
        ensure!(close(fold.validation.rmspe_spacing, v, 1e-12), "fold {f} validation {} vs {v}", fold.validation.rmspe_spacing);
        cal += c;
        val_s += v;
        hits += h;
    }
    let (cal, val_s) = (cal / 5.0, val_s / 5.0);
    let a = r.averages;
    ensure!(close(a.calibration_rmspe, cal, 1e-12), "calibration mean {} vs {cal}", a.calibration_rmspe);
    ensure!(close(a.validation_rmspe_spacing, val_s, 1e-12), "validation mean {} vs {val_s}", a.validation_rmspe_spacing);
    ensure!(a.validation_collisions == hits, "collisions {} vs {hits}", a.validation_collisions);
    Ok(format!("100 seeds give 5 disjoint folds of 10; fold means {cal:.4}/{val_s:.4} match"))
}

/// 10 Hz trace; `f(k)` gives (gap, lateral, lv_id) of sample k.
fn trace(n: usize, f: impl Fn(usize) -> (f64, f64, i64)) -> Vec<TrajectorySample> {
    (0..n)
        .map(|k| {
            let (gap, lateral_offset, lv_id) = f(k);
            TrajectorySample { t: k as f64 * 0.1, fv_speed: 15.0, gap, lv_speed: 15.0, lv_id, lateral_offset, lv_length: None }
        })
        .collect()
}

fn c8_extraction(_: &mut Shared) -> Outcome {
    let c = ExtractionCriteria::default();
    // (name, trace, expected sample ranges)
    let cases: Vec<(&str, Vec<TrajectorySample>, Vec<(usize, usize)>)> = vec![
        ("gap 119.9 m", trace(200, |_| (119.9, 0.5, 1)), vec![(0, 200)]),
        ("gap 120.1 m", trace(200, |_| (120.1, 0.5, 1)), vec![]),
        ("lateral 2.49 m", trace(200, |_| (30.0, 2.49, 1)), vec![(0, 200)]),
        ("lateral 2.51 m", trace(200, |_| (30.0, 2.51, 1)), vec![]),
        ("lateral -2.49 m", trace(200, |_| (30.0, -2.49, 1)), vec![(0, 200)]),
        ("lateral -2.51 m", trace(200, |_| (30.0, -2.51, 1)), vec![]),
        // 150 valid samples span 14.9 s, 152 span 15.1 s
        ("duration 14.9 s", trace(200, |k| (30.0, 0.0, if (20..170).contains(&k) { 1 } else { 0 })), vec![]),
        ("duration 15.1 s", trace(200, |k| (30.0, 0.0, if (20..172).contains(&k) { 1 } else { 0 })), vec![(20, 172)]),
        ("lv_id switch leaves one long run", trace(300, |k| (30.0, 0.0, if k < 100 { 1 } else { 2 })), vec![(100, 300)]),
        ("lv_id switch splits two long runs", trace(340, |k| (30.0, 0.0, if k < 160 { 1 } else { 2 })), vec![(0, 160), (160, 340)]),
        ("cut-in and back stays split", trace(450, |k| (30.0, 0.0, if (200..250).contains(&k) { 3 } else { 1 })), vec![(0, 200), (250, 450)]),
        (
            "single-sample gap spike",
            trace(400, |k| (if k == 200 { 120.1 } else { 119.9 }, 0.0, 1)),
            vec![(0, 200), (201, 400)],
        ),
    ];
    let n = cases.len();
    for (name, samples, want) in cases {
        let got: Vec<(usize, usize)> = extract_runs(&samples, &c).into_iter().map(|r| (r.start, r.end)).collect();
        ensure!(got == want, "{name}: got {got:?}, expected {want:?}");
        let periods = extract_periods(&samples, &c, "d", "d");
        ensure!(periods.len() == want.len(), "{name}: {} periods", periods.len());
        for (p, (a, b)) in periods.iter().zip(&want) {
            ensure!(p.samples == samples[*a..*b], "{name}: period samples differ");
        }
    }
    Ok(format!("{n} crafted traces give the expected periods"))
}

fn c9_inter_driver(_: &mut Shared) -> Outcome {
    let drivers = [
        synthetic_driver("short", &idm_with(0.6), 5, 30, 91),
        synthetic_driver("long", &idm_with(1.6), 5, 30, 92),
    ];
    let cfg = CalibrationConfig {
        ga: GaConfig { n_restarts: 2, ..GaConfig::for_model(Model::Idm) },
        ..Default::default()
    };
    let results: Vec<_> = drivers.iter().map(|d| calibrate_driver(Model::Idm, d, &cfg)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    let m = ok(inter_driver_matrix(&results, &drivers, &cfg.sim, &cfg.objective))?;
    let (diag, off) = m.spacing_means();
    let detail = format!("mean diagonal {diag:.4}, mean off-diagonal {off:.4}");
    ensure!(off > diag, "{detail}");
    Ok(detail)
}

fn c10_observed(_: &mut Shared) -> Outcome {
    // cruise, brake to a stop, stand, pull away, cruise
    let lv = piecewise_profile(27.0, &[(120.0, 0.0), (18.0, -1.5), (40.0, 0.0), (27.0, 1.0), (60.0, 0.0)]);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let ga = GaConfig { pop_size: 100, max_generations: 150, n_restarts: 2, ..GaConfig::for_model(Model::Idm) };
    let sim = SimConfig::default();
    let (mut cal_s, mut obs_s, mut cal_t, mut obs_t) = (vec![], vec![], vec![], vec![]);
    let (mut worst_s, mut worst_t): (f64, f64) = (0.0, 0.0);
    for i in 0..8 {
        let s_jam = rng.random_range(1.0..2.0);
        let t_des = rng.random_range(0.8..1.6);
        let law = ModelParams::Idm(IdmParams { a_max: 1.5, v_des: 150.0, beta: 12.0, b_comf: 2.0, s_jam, t_des });
        let id = format!("obs_{i:03}");
        let period = ok(synthesize_period(&law, &seed_period("obs", &id, &lv, s_jam + 27.0 * t_des), &sim))?;
        let o = ok(estimate_observed_idm(&[period.samples.clone()], &ObservedConfig::default()))?;
        let (Some(os), Some(ot)) = (o.s_jam, o.t_des) else {
            return Err(format!("driver {i}: no standstill or steady samples"));
        };
        worst_s = worst_s.max((os - s_jam).abs());
        worst_t = worst_t.max((ot - t_des).abs());
        let (fit, _) = ok(calibrate_periods(Model::Idm, &Model::Idm.bounds(), &[period], &ga, &sim, &ObjectiveConfig::default()))?;
        let g = fit.genome();
        cal_s.push(g[4]);
        cal_t.push(g[5]);
        obs_s.push(os);
        obs_t.push(ot);
    }
    let r_s = ok(pearson_correlation(&cal_s, &obs_s))?;
    let r_t = ok(pearson_correlation(&cal_t, &obs_t))?;
    let detail = format!(
        "8 drivers: max |s_jam error| {worst_s:.3} m, max |t_des error| {worst_t:.3} s, r(s_jam) {r_s:.3}, r(t_des) {r_t:.3}"
    );
    ensure!(worst_s <= 0.2 && worst_t <= 0.1, "{detail}");
    ensure!(r_s > 0.9 && r_t > 0.9, "{detail}");
    Ok(detail)
}

fn main() -> ExitCode {
    let only: Option<BTreeSet<usize>> = std::env::var("CFLAB_ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let criteria: [(&str, fn(&mut Shared) -> Outcome); 10] = [
        ("synthetic GHR recovery", c1_ghr_recovery),
        ("synthetic recovery, all models", c2_all_models),
        ("collision separation", c3_collisions),
        ("objective oracle", c4_objective_oracle),
        ("GA sanity", c5_ga_sanity),
        ("simulator kinematics", c6_kinematics),
        ("cross-validation structure", c7_cross_validation),
        ("extraction filter", c8_extraction),
        ("inter- vs intra-driver error", c9_inter_driver),
        ("observed IDM parameters", c10_observed),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut shared = Shared::default();
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| f(&mut shared))).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {n:>2} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {n:>2} {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
