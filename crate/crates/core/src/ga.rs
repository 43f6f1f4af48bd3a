//! Real-coded genetic algorithm over a box-bounded search space.
//!
//! Operators: rank fitness scaling (weight ∝ 1/√rank), stochastic universal
//! sampling, elitism, scattered crossover and Gaussian mutation with a
//! linearly shrinking spread. A run stops after `max_generations` or when
//! the weighted average relative change of the best fitness over the last
//! `stall_generations` falls below `function_tolerance`:
//!
//! ```text
//! change = Σ_{i=1..S} 0.5^(i-1) |b[g-i+1] - b[g-i]|  /  Σ_{i=1..S} 0.5^(i-1)  /  max(1, |b[g]|)
//! ```

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub pop_size: usize,
    pub max_generations: usize,
    pub stall_generations: usize,
    pub function_tolerance: f64,
    pub elite_fraction: f64,
    pub crossover_fraction: f64,
    /// Initial mutation spread as a fraction of each bound range.
    pub mutation_scale: f64,
    /// 1.0 shrinks the spread linearly to zero at `max_generations`.
    pub mutation_shrink: f64,
    pub seed: u64,
    pub n_restarts: usize,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            pop_size: 300,
            max_generations: 300,
            stall_generations: 100,
            function_tolerance: 1e-6,
            elite_fraction: 0.05,
            crossover_fraction: 0.8,
            mutation_scale: 0.1,
            mutation_shrink: 1.0,
            seed: 0,
            n_restarts: 12,
        }
    }
}

impl GaConfig {
    /// Defaults sized for the model: the Wiedemann law gets a larger
    /// population and budget.
    pub fn for_model(model: Model) -> Self {
        match model {
            Model::W99 => Self { pop_size: 500, max_generations: 1300, stall_generations: 150, ..Self::default() },
            _ => Self::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let frac = |x: f64| x > 0.0 && x <= 1.0;
        if self.pop_size < 2 {
            return Err(Error::InvalidArgument(format!("pop_size must be >= 2, got {}", self.pop_size)));
        }
        if self.max_generations == 0 || self.n_restarts == 0 {
            return Err(Error::InvalidArgument("max_generations and n_restarts must be >= 1".into()));
        }
        if !frac(self.elite_fraction) || !frac(self.crossover_fraction) {
            return Err(Error::InvalidArgument("elite and crossover fractions must lie in (0, 1]".into()));
        }
        if self.mutation_scale < 0.0 || !(0.0..=1.0).contains(&self.mutation_shrink) {
            return Err(Error::InvalidArgument("mutation scale must be >= 0 and shrink in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn elite_count(&self) -> usize {
        ((self.elite_fraction * self.pop_size as f64).ceil() as usize).clamp(1, self.pop_size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genome: Vec<f64>,
    pub fitness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    MaxGenerations,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaResult {
    pub best_genome: Vec<f64>,
    pub best_fitness: f64,
    pub generations_run: usize,
    pub termination_reason: Termination,
    /// Best fitness of each generation.
    pub fitness_history: Vec<f64>,
    pub seed: u64,
}

/// Per-generation progress, streamed as JSON lines by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
}

fn check_bounds(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::InvalidArgument("empty bounds".into()));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!("bad bounds [{lo}, {hi}] for gene {i}")));
        }
    }
    Ok(())
}

/// Uniform random genomes inside the box.
pub fn initialize_population<R: Rng>(bounds: &[(f64, f64)], pop_size: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    check_bounds(bounds)?;
    Ok((0..pop_size)
        .map(|_| bounds.iter().map(|&(lo, hi)| if lo == hi { lo } else { rng.random_range(lo..=hi) }).collect())
        .collect())
}

/// Indices sorted best-first; ties keep input order.
fn ranking(fitnesses: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitnesses.len()).collect();
    order.sort_by(|&a, &b| fitnesses[a].total_cmp(&fitnesses[b]));
    order
}

/// Selection weights in input order: the individual of rank r (1 = best)
/// gets weight ∝ 1/√r, normalised to sum to one.
pub fn rank_scale(fitnesses: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; fitnesses.len()];
    for (rank, idx) in ranking(fitnesses).into_iter().enumerate() {
        w[idx] = 1.0 / ((rank + 1) as f64).sqrt();
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Stochastic universal sampling: one random offset in `[0, 1/n)`, then `n`
/// equally spaced pointers along the cumulative weights.
pub fn select_parents_sus<R: Rng>(weights: &[f64], n: usize, rng: &mut R) -> Vec<usize> {
    if n == 0 || weights.is_empty() {
        return Vec::new();
    }
    let step = 1.0 / n as f64;
    let offset = rng.random::<f64>() * step;
    let mut out = Vec::with_capacity(n);
    let mut idx = 0;
    let mut cum = weights[0];
    for k in 0..n {
        let pointer = offset + k as f64 * step;
        while pointer >= cum && idx + 1 < weights.len() {
            idx += 1;
            cum += weights[idx];
        }
        out.push(idx);
    }
    out
}

/// Child takes gene i from `p1` where `mask[i]` is set, else from `p2`.
pub fn crossover_with_mask(p1: &[f64], p2: &[f64], mask: &[bool]) -> Vec<f64> {
    p1.iter().zip(p2).zip(mask).map(|((&a, &b), &m)| if m { a } else { b }).collect()
}

/// Scattered crossover with a fresh random mask.
pub fn crossover_scatter<R: Rng>(p1: &[f64], p2: &[f64], rng: &mut R) -> Vec<f64> {
    let mask: Vec<bool> = (0..p1.len()).map(|_| rng.random_bool(0.5)).collect();
    crossover_with_mask(p1, p2, &mask)
}

/// Gaussian perturbation of every gene with spread
/// `mutation_scale * (1 - shrink * generation / max_generations) * range`,
/// clamped back into the box.
pub fn mutate_gaussian<R: Rng>(
    genome: &[f64],
    bounds: &[(f64, f64)],
    generation: usize,
    cfg: &GaConfig,
    rng: &mut R,
) -> Vec<f64> {
    let progress = (generation as f64 / cfg.max_generations as f64).min(1.0);
    let scale = cfg.mutation_scale * (1.0 - cfg.mutation_shrink * progress);
    genome
        .iter()
        .zip(bounds)
        .map(|(&x, &(lo, hi))| {
            let z: f64 = StandardNormal.sample(rng);
            let sigma = scale * (hi - lo);
            if sigma <= 0.0 {
                x
            } else {
                (x + z * sigma).clamp(lo, hi)
            }
        })
        .collect()
}

/// Weighted average relative change of the best fitness over the last
/// `window` generations. `None` until the history is long enough.
pub fn stall_change(history: &[f64], window: usize) -> Option<f64> {
    if window == 0 || history.len() <= window {
        return None;
    }
    let g = history.len() - 1;
    let (mut num, mut den, mut w) = (0.0, 0.0, 1.0);
    for i in 1..=window {
        num += w * (history[g + 1 - i] - history[g - i]).abs();
        den += w;
        w *= 0.5;
    }
    Some(num / den / history[g].abs().max(1.0))
}

fn evaluate<F>(objective: &F, population: &[Vec<f64>]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    population
        .par_iter()
        .map(|g| match objective(g) {
            Ok(f) if f.is_nan() => Ok(f64::INFINITY),
            Ok(f) => Ok(f),
            Err(e) => Err(Error::Objective { genome: g.clone(), source: Box::new(e) }),
        })
        .collect()
}

/// Runs one GA. `progress` sees every generation's statistics.
pub fn evolve_with_progress<F>(
    objective: F,
    bounds: &[(f64, f64)],
    cfg: &GaConfig,
    progress: &mut dyn FnMut(&GenerationStats),
) -> Result<GaResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    check_bounds(bounds)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut population = initialize_population(bounds, cfg.pop_size, &mut rng)?;
    let n_elite = cfg.elite_count();
    let rest = cfg.pop_size - n_elite;
    let n_cross = (cfg.crossover_fraction * rest as f64).round() as usize;
    let n_mut = rest - n_cross;

    let mut history = Vec::new();
    let mut best = Individual { genome: population[0].clone(), fitness: f64::INFINITY };
    let mut generation = 0;
    let termination = loop {
        let fitness = evaluate(&objective, &population)?;
        let order = ranking(&fitness);
        let leader = order[0];
        if fitness[leader] < best.fitness || history.is_empty() {
            best = Individual { genome: population[leader].clone(), fitness: fitness[leader] };
        }
        history.push(best.fitness);
        let finite: Vec<f64> = fitness.iter().copied().filter(|f| f.is_finite()).collect();
        let mean = if finite.is_empty() { f64::INFINITY } else { finite.iter().sum::<f64>() / finite.len() as f64 };
        progress(&GenerationStats { generation, best: best.fitness, mean });
        generation += 1;

        if generation >= cfg.max_generations {
            break Termination::MaxGenerations;
        }
        if stall_change(&history, cfg.stall_generations).is_some_and(|c| c < cfg.function_tolerance) {
            break Termination::Tolerance;
        }

        let weights = rank_scale(&fitness);
        let mut parents = select_parents_sus(&weights, 2 * n_cross + n_mut, &mut rng);
        parents.shuffle(&mut rng);

        let mut next = Vec::with_capacity(cfg.pop_size);
        next.extend(order[..n_elite].iter().map(|&i| population[i].clone()));
        for pair in parents[..2 * n_cross].chunks_exact(2) {
            next.push(crossover_scatter(&population[pair[0]], &population[pair[1]], &mut rng));
        }
        for &p in &parents[2 * n_cross..] {
            next.push(mutate_gaussian(&population[p], bounds, generation - 1, cfg, &mut rng));
        }
        population = next;
    };

    Ok(GaResult {
        best_genome: best.genome,
        best_fitness: best.fitness,
        generations_run: generation,
        termination_reason: termination,
        fitness_history: history,
        seed: cfg.seed,
    })
}

pub fn evolve<F>(objective: F, bounds: &[(f64, f64)], cfg: &GaConfig) -> Result<GaResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    evolve_with_progress(objective, bounds, cfg, &mut |_| {})
}

/// All restarts, run with seeds `seed, seed + 1, …`.
pub fn multistart_runs<F>(objective: F, bounds: &[(f64, f64)], cfg: &GaConfig) -> Result<Vec<GaResult>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    multistart_runs_with_progress(objective, bounds, cfg, &mut |_, _| {})
}

/// As [`multistart_runs`]; `progress` also receives the restart index.
pub fn multistart_runs_with_progress<F>(
    objective: F,
    bounds: &[(f64, f64)],
    cfg: &GaConfig,
    progress: &mut dyn FnMut(usize, &GenerationStats),
) -> Result<Vec<GaResult>>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if cfg.n_restarts == 0 {
        return Err(Error::InvalidArgument("n_restarts must be >= 1".into()));
    }
    (0..cfg.n_restarts)
        .map(|r| {
            let run = GaConfig { seed: cfg.seed.wrapping_add(r as u64), ..*cfg };
            evolve_with_progress(&objective, bounds, &run, &mut |s| progress(r, s))
        })
        .collect()
}

/// Best of `n_restarts` independent runs (earliest run wins ties).
pub fn multistart<F>(objective: F, bounds: &[(f64, f64)], cfg: &GaConfig) -> Result<GaResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    Ok(best_run(multistart_runs(objective, bounds, cfg)?))
}

pub fn multistart_with_progress<F>(
    objective: F,
    bounds: &[(f64, f64)],
    cfg: &GaConfig,
    progress: &mut dyn FnMut(usize, &GenerationStats),
) -> Result<GaResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    Ok(best_run(multistart_runs_with_progress(objective, bounds, cfg, progress)?))
}

pub fn best_run(runs: Vec<GaResult>) -> GaResult {
    runs.into_iter()
        .reduce(|a, b| if b.best_fitness < a.best_fitness { b } else { a })
        .expect("at least one run")
}
