//! `cflab`: extraction, simulation, calibration, validation and reports.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 computation
//! failure.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cflab::config::RunConfig;
use cflab::ga::GenerationStats;
use cflab::models::{Model, ModelParams};
use cflab::objective::{cdf_curve, error_report, write_cdf_csv, ObjectiveConfig};
use cflab::report::{
    fold_errors, svg_cdf_plot, svg_overlay, write_error_bars_csv, write_matrix_csv, write_summary_csv,
};
use cflab::simulator::{simulate_period, write_trace, SimConfig};
use cflab::trajectory::{
    extract_periods, load_datasets, load_period, load_trajectory_file, resample_10hz, write_period, DriverDataset,
    PeriodSummary, TrajectorySample,
};
use cflab::workflow::{
    calibrate_driver_with_progress, driver_fold_plan, estimate_observed_idm, evaluate_on_folds, inter_driver_matrix,
    load_calibration_results, pearson_correlation, seed_period, summarize_params, synthetic_verify_with_progress,
    varied_lv_profile, write_calibration_result, AccelStatistic, CalibrationResult, ObservedIdmParams,
};

#[derive(Parser)]
#[command(name = "cflab", version, about = "Car-following model calibration and validation")]
struct Cli {
    /// JSON run configuration; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base random seed for fold splits, GA runs and the W99 stream.
    #[arg(long, global = true, env = "CFLAB_SEED")]
    seed: Option<u64>,
    /// Worker threads (default: all processors).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract car-following periods from 10 Hz trajectory files.
    Extract(ExtractArgs),
    /// Replay periods with one parameter set and write per-sample traces.
    Simulate(SimulateArgs),
    /// k-fold calibration and validation of every driver.
    Calibrate(CalibrateArgs),
    /// Write fold plans; optionally score a parameter set on each fold.
    Crossval(CrossvalArgs),
    /// Recover known parameters from model-generated data.
    Synthetic(SyntheticArgs),
    /// Apply every driver's parameters to every other driver's data.
    Interdriver(InterdriverArgs),
    /// Estimate IDM parameters directly from driving data.
    Observe(ObserveArgs),
    /// Summary tables, error c.d.f.s and SVG figures from a results tree.
    Report(ReportArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Trajectory CSV files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Driver id (default: each file's stem).
    #[arg(long)]
    driver: Option<String>,
    #[arg(long)]
    max_gap: Option<f64>,
    #[arg(long)]
    max_lateral: Option<f64>,
    #[arg(long)]
    min_duration: Option<f64>,
    #[arg(long)]
    max_dropout: Option<f64>,
    /// Resample irregular input onto the 0.1 s grid first.
    #[arg(long)]
    resample: bool,
}

#[derive(Args)]
struct DataArg {
    /// Period data: a `<driver>/*.csv` tree, one driver directory or one CSV.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    model: Model,
    /// Parameter JSON (field object, optionally tagged with "model");
    /// defaults to the reference medians.
    #[arg(long)]
    params: Option<PathBuf>,
    #[command(flatten)]
    data: DataArg,
    /// Also write SVG overlays.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct GaArgs {
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    /// Stream per-generation progress to stderr as JSON lines.
    #[arg(long)]
    progress: bool,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Comma-separated models, or "all".
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
    #[command(flatten)]
    data: DataArg,
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    ga: GaArgs,
}

#[derive(Args)]
struct CrossvalArgs {
    #[command(flatten)]
    data: DataArg,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, requires = "params")]
    model: Option<Model>,
    #[arg(long, requires = "model")]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct SyntheticArgs {
    /// Comma-separated models, or "all".
    #[arg(long, value_delimiter = ',', default_value = "all")]
    models: Vec<String>,
    /// Ground truth parameter JSON (single model only); default: medians.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Period whose leader drives the synthetic follower; default: a built-in
    /// 60 s profile.
    #[arg(long)]
    seed_period: Option<PathBuf>,
    /// Shrink the search box to the true point.
    #[arg(long)]
    collapse_bounds: bool,
    #[command(flatten)]
    ga: GaArgs,
}

#[derive(Args)]
struct InterdriverArgs {
    #[arg(long)]
    model: Model,
    /// Results root holding `<model>/<driver>/fold*.json`.
    #[arg(long)]
    results: Option<PathBuf>,
    #[command(flatten)]
    data: DataArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum AccelStat {
    Max,
    P995,
}

#[derive(Args)]
struct ObserveArgs {
    /// Raw trajectory CSVs (one drive per file, driver = file stem) or
    /// period directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum)]
    accel_stat: Option<AccelStat>,
    /// Results root; adds correlations between calibrated IDM parameters and
    /// the observed ones.
    #[arg(long)]
    results: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Results root holding one directory per model.
    #[arg(long)]
    results: Option<PathBuf>,
    /// Period data for overlays and inter-driver matrices.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Overlay plots per driver.
    #[arg(long)]
    overlays: Option<usize>,
}

/// Failure caused by the user's input rather than a computation.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<cflab::Error>() {
            return if e.is_input_error() { 2 } else { 3 };
        }
    }
    3
}

/// Settings after merging the config file, flags and environment.
struct Ctx {
    cfg: RunConfig,
    seed: Option<u64>,
    out: PathBuf,
}

impl Ctx {
    fn calibration(&self, model: Model, ga: &GaArgs) -> cflab::workflow::CalibrationConfig {
        let mut c = self.cfg.calibration(model);
        if let Some(s) = self.seed {
            c.ga.seed = s;
        }
        if let Some(r) = ga.restarts {
            c.ga.n_restarts = r;
        }
        if let Some(p) = ga.pop {
            c.ga.pop_size = p;
        }
        if let Some(g) = ga.generations {
            c.ga.max_generations = g;
        }
        c
    }

    fn sim(&self) -> SimConfig {
        let mut s = self.cfg.sim;
        if let Some(seed) = self.seed {
            s.rng_seed = seed;
        }
        s
    }

    fn data(&self, arg: &Option<PathBuf>) -> Result<PathBuf> {
        arg.clone()
            .or_else(|| self.cfg.data.clone())
            .ok_or_else(|| input_error("no data path given (use --data or the config's \"data\")"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("config {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(input_error("--jobs must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    log::info!("desired speeds are in km/h, trajectory speeds in m/s");
    let out = cli.out.clone().or_else(|| cfg.out.clone());
    let default_out = match &cli.command {
        Command::Extract(_) => "periods",
        _ => "results",
    };
    let ctx = Ctx { cfg, seed: cli.seed, out: out.unwrap_or_else(|| PathBuf::from(default_out)) };
    match cli.command {
        Command::Extract(a) => cmd_extract(&ctx, a),
        Command::Simulate(a) => cmd_simulate(&ctx, a),
        Command::Calibrate(a) => cmd_calibrate(&ctx, a),
        Command::Crossval(a) => cmd_crossval(&ctx, a),
        Command::Synthetic(a) => cmd_synthetic(&ctx, a),
        Command::Interdriver(a) => cmd_interdriver(&ctx, a),
        Command::Observe(a) => cmd_observe(&ctx, a),
        Command::Report(a) => cmd_report(&ctx, a),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn create(path: &Path) -> Result<fs::File> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn to_json(v: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn parse_models(names: &[String], fallback: &[Model]) -> Result<Vec<Model>> {
    if names.is_empty() {
        return Ok(fallback.to_vec());
    }
    if names.len() == 1 && names[0].eq_ignore_ascii_case("all") {
        return Ok(Model::ALL.to_vec());
    }
    let mut out = Vec::new();
    for n in names {
        let m: Model = n.parse()?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

/// Parameter file: a field object, optionally carrying a `"model"` tag that
/// must agree with `model`.
fn load_params(path: &Path, model: Model) -> Result<ModelParams> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(obj) = value.as_object_mut() {
        if let Some(tag) = obj.remove("model") {
            let tagged: Model = tag.as_str().unwrap_or_default().parse()?;
            if tagged != model {
                return Err(input_error(format!("{} holds {tagged} parameters, expected {model}", path.display())));
            }
        }
    }
    let p = ModelParams::from_json(model, &value).with_context(|| format!("parameters in {}", path.display()))?;
    p.check_bounds()?;
    Ok(p)
}

/// A `<driver>/*.csv` tree, a single driver directory, or one period CSV.
fn load_any(path: &Path) -> Result<Vec<DriverDataset>> {
    if !path.exists() {
        return Err(anyhow::Error::new(std::io::Error::from(std::io::ErrorKind::NotFound)))
            .with_context(|| format!("{} does not exist", path.display()));
    }
    if path.is_file() {
        let p = load_period(path)?;
        return Ok(vec![DriverDataset::new(p.driver_id.clone(), vec![p])?]);
    }
    let has_csv = fs::read_dir(path)?
        .filter_map(|e| e.ok())
        .any(|e| e.path().extension().and_then(|x| x.to_str()) == Some("csv"));
    let sets = if has_csv {
        let parent = path.parent().unwrap_or(Path::new("."));
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        load_datasets(parent)?.into_iter().filter(|d| d.driver_id == name).collect()
    } else {
        load_datasets(path)?
    };
    if sets.is_empty() {
        return Err(input_error(format!("no period CSVs found under {}", path.display())));
    }
    Ok(sets)
}

fn cmd_extract(ctx: &Ctx, a: ExtractArgs) -> Result<()> {
    let mut criteria = ctx.cfg.extraction;
    criteria.max_gap = a.max_gap.unwrap_or(criteria.max_gap);
    criteria.max_lateral = a.max_lateral.unwrap_or(criteria.max_lateral);
    criteria.min_duration = a.min_duration.unwrap_or(criteria.min_duration);
    criteria.max_dropout = a.max_dropout.unwrap_or(criteria.max_dropout);
    criteria.validate()?;

    #[derive(serde::Serialize)]
    struct Entry {
        driver_id: String,
        source: String,
        periods: Vec<PeriodSummary>,
    }
    let mut manifest = Vec::new();
    let mut durations = Vec::new();
    for input in &a.inputs {
        let mut samples = load_trajectory_file(input).with_context(|| format!("loading {}", input.display()))?;
        if a.resample {
            samples = resample_10hz(&samples)?;
        }
        let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("drive").to_string();
        let driver = a.driver.clone().unwrap_or_else(|| stem.clone());
        let periods = extract_periods(&samples, &criteria, &driver, &stem);
        for p in &periods {
            write_period(&ctx.out.join(&driver), p)?;
            durations.push(p.duration());
        }
        manifest.push(Entry {
            driver_id: driver,
            source: input.display().to_string(),
            periods: periods.iter().map(PeriodSummary::from).collect(),
        });
    }
    write_file(&ctx.out.join("manifest.json"), to_json(&manifest)?)?;
    let total: f64 = durations.iter().sum();
    if durations.is_empty() {
        println!("0 periods");
    } else {
        let min = durations.iter().copied().fold(f64::INFINITY, f64::min);
        let max = durations.iter().copied().fold(0.0, f64::max);
        println!(
            "{} periods, total {:.1} s, mean {:.1} s, min {:.1} s, max {:.1} s",
            durations.len(),
            total,
            total / durations.len() as f64,
            min,
            max
        );
    }
    Ok(())
}

fn cmd_simulate(ctx: &Ctx, a: SimulateArgs) -> Result<()> {
    let params = match &a.params {
        Some(p) => load_params(p, a.model)?,
        None => ModelParams::median(a.model),
    };
    let sim = ctx.sim();
    let obj = ctx.cfg.objective;
    let sets = load_any(&ctx.data(&a.data.data)?)?;
    println!("driver,period,rmspe_spacing,rmspe_speed,collided,collision_time");
    for d in &sets {
        for p in &d.periods {
            let r = simulate_period(&params, p, &sim)?;
            let dir = ctx.out.join("traces").join(&d.driver_id);
            write_trace(create(&dir.join(format!("{}.csv", p.period_id)))?, p, &r)?;
            if a.plot {
                let title = format!("{} / {} ({})", d.driver_id, p.period_id, a.model);
                write_file(&dir.join(format!("{}.svg", p.period_id)), svg_overlay(p, &r, &title))?;
            }
            let rep = error_report(&params, std::slice::from_ref(p), &sim, &obj)?;
            println!(
                "{},{},{:.6},{:.6},{},{}",
                d.driver_id,
                p.period_id,
                rep.rmspe_spacing,
                rep.rmspe_speed,
                r.collided,
                r.collision_time.map(|t| format!("{t:.1}")).unwrap_or_default()
            );
        }
    }
    Ok(())
}

fn progress_printer(enabled: bool, model: Model, driver: String) -> impl FnMut(usize, usize, &GenerationStats) {
    move |fold, restart, s| {
        if enabled {
            let line = serde_json::json!({
                "model": model, "driver": driver, "fold": fold, "restart": restart,
                "generation": s.generation, "best": s.best, "mean": s.mean,
            });
            eprintln!("{line}");
        }
    }
}

/// summary.csv, the two c.d.f. CSVs and errors.csv for one model.
fn write_model_tables(model_dir: &Path, results: &[CalibrationResult]) -> Result<()> {
    write_summary_csv(create(&model_dir.join("summary.csv"))?, &summarize_params(results)?)?;
    let (cal, val) = fold_errors(results);
    write_cdf_csv(create(&model_dir.join("cdf_calibration.csv"))?, &cdf_curve(&cal))?;
    write_cdf_csv(create(&model_dir.join("cdf_validation.csv"))?, &cdf_curve(&val))?;
    write_error_bars_csv(create(&model_dir.join("errors.csv"))?, results)?;
    Ok(())
}

fn cmd_calibrate(ctx: &Ctx, a: CalibrateArgs) -> Result<()> {
    let models = parse_models(&a.models, &ctx.cfg.models)?;
    let sets = load_any(&ctx.data(&a.data.data)?)?;
    for model in models {
        let mut cfg = ctx.calibration(model, &a.ga);
        cfg.k = a.k.unwrap_or(cfg.k);
        cfg.sim = ctx.sim();
        cfg.ga.validate()?;
        let model_dir = ctx.out.join(model.name());
        let mut results = Vec::new();
        for d in &sets {
            if d.periods.len() < cfg.k {
                return Err(input_error(format!(
                    "driver {} has {} periods, fewer than k = {}",
                    d.driver_id,
                    d.periods.len(),
                    cfg.k
                )));
            }
            let mut progress = progress_printer(a.ga.progress, model, d.driver_id.clone());
            let r = calibrate_driver_with_progress(model, d, &cfg, &mut progress)
                .with_context(|| format!("calibrating {model} for driver {}", d.driver_id))?;
            write_calibration_result(&model_dir, &r)?;
            println!(
                "{model} {}: calibration {:.5}  validation spacing {:.5}  speed {:.5}  collisions {}",
                r.driver_id,
                r.averages.calibration_rmspe,
                r.averages.validation_rmspe_spacing,
                r.averages.validation_rmspe_speed,
                r.averages.validation_collisions
            );
            results.push(r);
        }
        write_model_tables(&model_dir, &results)?;
    }
    Ok(())
}

fn cmd_crossval(ctx: &Ctx, a: CrossvalArgs) -> Result<()> {
    let sets = load_any(&ctx.data(&a.data.data)?)?;
    let k = a.k.unwrap_or(ctx.cfg.k);
    let seed = ctx.seed.or(ctx.cfg.ga.seed).unwrap_or(0);
    let params = match (&a.model, &a.params) {
        (Some(m), Some(p)) => Some(load_params(p, *m)?),
        _ => None,
    };
    let sim = ctx.sim();
    for d in &sets {
        let plan = driver_fold_plan(d, k, seed)?;
        let ids: Vec<Vec<String>> =
            plan.folds.iter().map(|f| f.iter().map(|&i| d.periods[i].period_id.clone()).collect()).collect();
        let doc = serde_json::json!({ "driver_id": d.driver_id, "k": k, "seed": seed, "folds": plan.folds, "period_ids": ids });
        write_file(&ctx.out.join("folds").join(format!("{}.json", d.driver_id)), to_json(&doc)?)?;
        println!("{}: {} periods in {} folds of sizes {:?}", d.driver_id, d.periods.len(), k, plan.folds.iter().map(Vec::len).collect::<Vec<_>>());
        if let Some(p) = &params {
            let reports = evaluate_on_folds(p, d, &ids, &sim, &ctx.cfg.objective)?;
            for (f, r) in reports.iter().enumerate() {
                println!(
                    "  fold {}: spacing {:.5}  speed {:.5}  collisions {}",
                    f + 1,
                    r.rmspe_spacing,
                    r.rmspe_speed,
                    r.collided_count
                );
            }
            let name = format!("{}_{}.json", d.driver_id, p.model());
            write_file(&ctx.out.join("folds").join(name), to_json(&reports)?)?;
        }
    }
    Ok(())
}

fn cmd_synthetic(ctx: &Ctx, a: SyntheticArgs) -> Result<()> {
    let models = parse_models(&a.models, &Model::ALL)?;
    if a.params.is_some() && models.len() != 1 {
        return Err(input_error("--params needs exactly one model"));
    }
    let seed = match &a.seed_period {
        Some(p) => load_period(p).with_context(|| format!("loading {}", p.display()))?,
        None => seed_period("synthetic", "synthetic_000", &varied_lv_profile(), 25.0),
    };
    let obj: ObjectiveConfig = ctx.cfg.objective;
    let sim = ctx.sim();
    for model in models {
        let truth = match &a.params {
            Some(p) => load_params(p, model)?,
            None => ModelParams::median(model),
        };
        let cfg = ctx.calibration(model, &a.ga);
        let mut printer = progress_printer(a.ga.progress, model, "synthetic".into());
        let r = synthetic_verify_with_progress(&truth, &seed, &cfg.ga, &sim, &obj, a.collapse_bounds, &mut |r, s| {
            printer(0, r, s)
        })
            .with_context(|| format!("synthetic recovery for {model}"))?;
        println!("{model}: RMSPE {:.6}  collisions {}  generations {}", r.rmspe, r.report.collided_count, r.ga.generations_run);
        for ((spec, t), g) in model.params().iter().zip(truth.genome()).zip(r.recovered_params.genome()) {
            println!("  {:<8} true {:>10.4}  recovered {:>10.4}", spec.name, t, g);
        }
        write_file(&ctx.out.join("synthetic").join(format!("{model}.json")), to_json(&r)?)?;
    }
    Ok(())
}

fn matched_datasets(results: &[CalibrationResult], sets: Vec<DriverDataset>) -> Result<Vec<DriverDataset>> {
    results
        .iter()
        .map(|r| {
            sets.iter()
                .find(|d| d.driver_id == r.driver_id)
                .cloned()
                .ok_or_else(|| input_error(format!("no data for driver {}", r.driver_id)))
        })
        .collect()
}

fn load_model_results(root: &Path, model: Model) -> Result<Vec<CalibrationResult>> {
    let dir = root.join(model.name());
    if !dir.is_dir() {
        return Err(input_error(format!("no results for {model} under {}", root.display())));
    }
    let results = load_calibration_results(&dir)?;
    if results.is_empty() {
        return Err(input_error(format!("no fold results under {}", dir.display())));
    }
    Ok(results)
}

fn write_interdriver(model_dir: &Path, m: &cflab::workflow::InterDriverMatrix) -> Result<()> {
    write_matrix_csv(create(&model_dir.join("interdriver_spacing.csv"))?, &m.drivers, &m.spacing)?;
    write_matrix_csv(create(&model_dir.join("interdriver_speed.csv"))?, &m.drivers, &m.speed)?;
    Ok(())
}

fn cmd_interdriver(ctx: &Ctx, a: InterdriverArgs) -> Result<()> {
    let root = a.results.clone().unwrap_or_else(|| ctx.out.clone());
    let results = load_model_results(&root, a.model)?;
    let sets = matched_datasets(&results, load_any(&ctx.data(&a.data.data)?)?)?;
    let m = inter_driver_matrix(&results, &sets, &ctx.sim(), &ctx.cfg.objective)?;
    write_interdriver(&root.join(a.model.name()), &m)?;
    let (diag, off) = m.spacing_means();
    println!("{}: intra-driver spacing RMSPE {:.5}, inter-driver {:.5}, collisions {}", a.model, diag, off, m.collisions);
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_observe(ctx: &Ctx, a: ObserveArgs) -> Result<()> {
    let mut cfg = ctx.cfg.observed;
    if let Some(s) = a.accel_stat {
        cfg.accel_statistic = match s {
            AccelStat::Max => AccelStatistic::Max,
            AccelStat::P995 => AccelStatistic::Percentile995,
        };
    }
    let mut drivers: Vec<(String, Vec<Vec<TrajectorySample>>)> = Vec::new();
    for input in &a.inputs {
        if input.is_dir() {
            for d in load_any(input)? {
                drivers.push((d.driver_id.clone(), d.periods.into_iter().map(|p| p.samples).collect()));
            }
        } else {
            let samples = load_trajectory_file(input).with_context(|| format!("loading {}", input.display()))?;
            let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("drive").to_string();
            match drivers.iter_mut().find(|(d, _)| *d == stem) {
                Some((_, segs)) => segs.push(samples),
                None => drivers.push((stem, vec![samples])),
            }
        }
    }
    let mut observed: Vec<(String, ObservedIdmParams)> = Vec::new();
    let mut w = csv::Writer::from_writer(create(&ctx.out.join("observed.csv"))?);
    w.write_record([
        "driver", "a_max", "v_des", "beta", "b_comf", "s_jam", "t_des", "n_free", "n_steady", "n_standstill", "n_following",
    ])?;
    for (driver, segs) in drivers {
        let o = estimate_observed_idm(&segs, &cfg)?;
        w.write_record([
            driver.clone(),
            opt(o.a_max),
            opt(o.v_des),
            o.beta.to_string(),
            opt(o.b_comf),
            opt(o.s_jam),
            opt(o.t_des),
            o.counts.free.to_string(),
            o.counts.steady.to_string(),
            o.counts.standstill.to_string(),
            o.counts.following.to_string(),
        ])?;
        println!(
            "{driver}: a_max {}  v_des {}  b_comf {}  s_jam {}  t_des {}",
            opt(o.a_max),
            opt(o.v_des),
            opt(o.b_comf),
            opt(o.s_jam),
            opt(o.t_des)
        );
        observed.push((driver, o));
    }
    w.flush()?;

    if let Some(root) = &a.results {
        let results = load_model_results(root, Model::Idm)?;
        let mut corr = csv::Writer::from_writer(create(&ctx.out.join("correlations.csv"))?);
        corr.write_record(["parameter", "n", "pearson_r"])?;
        for (d, spec) in Model::Idm.params().iter().enumerate() {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for r in &results {
                let Some((_, o)) = observed.iter().find(|(id, _)| *id == r.driver_id) else { continue };
                let obs = [o.a_max, o.v_des, Some(o.beta), o.b_comf, o.s_jam, o.t_des][d];
                if let Some(y) = obs {
                    xs.push(r.folds.iter().map(|f| f.genome[d]).sum::<f64>() / r.folds.len() as f64);
                    ys.push(y);
                }
            }
            let r = pearson_correlation(&xs, &ys).ok();
            corr.write_record([spec.name.to_string(), xs.len().to_string(), opt(r)])?;
            println!("  {:<7} r = {}", spec.name, r.map(|v| format!("{v:.3}")).unwrap_or_else(|| "n/a".into()));
        }
        corr.flush()?;
    }
    Ok(())
}

fn cmd_report(ctx: &Ctx, a: ReportArgs) -> Result<()> {
    let root = a.results.clone().unwrap_or_else(|| ctx.out.clone());
    if !root.is_dir() {
        return Err(input_error(format!("results directory {} not found", root.display())));
    }
    let mut models: Vec<Model> = fs::read_dir(&root)
        .with_context(|| format!("reading {}", root.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().to_str().and_then(|n| n.parse().ok()))
        .collect();
    models.sort();
    if models.is_empty() {
        return Err(input_error(format!("no model results under {}", root.display())));
    }
    let overlays = a.overlays.unwrap_or(ctx.cfg.report.overlays);
    let sets = match a.data.as_ref().or(ctx.cfg.data.as_ref()) {
        Some(p) => Some(load_any(p)?),
        None => None,
    };
    let sim = ctx.sim();
    for model in models {
        let dir = root.join(model.name());
        let results = load_model_results(&root, model)?;
        write_model_tables(&dir, &results)?;
        let (cal, val) = fold_errors(&results);
        if ctx.cfg.report.plots {
            let svg = svg_cdf_plot(
                &[("calibration", cdf_curve(&cal)), ("validation", cdf_curve(&val))],
                &format!("{model}: spacing RMSPE"),
                "RMSPE",
            );
            write_file(&dir.join("cdf.svg"), svg)?;
        }
        if let Some(sets) = &sets {
            let matched = matched_datasets(&results, sets.clone())?;
            if results.len() >= 2 {
                write_interdriver(&dir, &inter_driver_matrix(&results, &matched, &sim, &ctx.cfg.objective)?)?;
            }
            if ctx.cfg.report.plots {
                for (r, d) in results.iter().zip(&matched) {
                    let mut drawn = 0;
                    for f in &r.folds {
                        let params = f.model_params()?;
                        for id in &f.validation_period_ids {
                            let Some(p) = d.periods.iter().find(|p| &p.period_id == id) else { continue };
                            let res = simulate_period(&params, p, &sim)?;
                            if drawn < overlays || res.collided {
                                let title = format!("{model} {} / {} (fold {})", r.driver_id, id, f.fold + 1);
                                let path = dir.join("overlays").join(&r.driver_id).join(format!("{id}.svg"));
                                write_file(&path, svg_overlay(p, &res, &title))?;
                                drawn += 1;
                            }
                        }
                    }
                }
            }
        }
        println!(
            "{model}: {} drivers, mean calibration {:.5}, mean validation {:.5}",
            results.len(),
            mean(&cal),
            mean(&val)
        );
    }
    std::io::stdout().flush()?;
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}
