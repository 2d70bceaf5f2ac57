//! Derivative-free fitting of friction parameters against displacement
//! traces: a real-coded genetic algorithm (tournament selection, blend
//! crossover, Gaussian mutation, elitism of one) over a bounded box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::friction::FrictionParams;
use crate::lumped::{IntegratorConfig, ModelKind, SimError};
use crate::signal::InputSignal;
use crate::systems::{
    simulate_stickslip_driven, simulate_valve, MassSpringParams, ValveParams,
};

/// Which plant generates the displacement being fitted.
#[derive(Debug, Clone)]
pub enum PlantKind {
    Valve(ValveParams),
    MassSpring(MassSpringParams),
}

/// Friction parameter selectable for fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeParam {
    Sigma0,
    Sigma1,
    Sigma2,
    MuD,
    MuS,
    VStribeck,
    Delta,
    Eps,
}

impl FreeParam {
    pub fn name(&self) -> &'static str {
        match self {
            FreeParam::Sigma0 => "sigma0",
            FreeParam::Sigma1 => "sigma1",
            FreeParam::Sigma2 => "sigma2",
            FreeParam::MuD => "mu_d",
            FreeParam::MuS => "mu_s",
            FreeParam::VStribeck => "v_s",
            FreeParam::Delta => "delta",
            FreeParam::Eps => "eps",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "sigma0" => FreeParam::Sigma0,
            "sigma1" => FreeParam::Sigma1,
            "sigma2" => FreeParam::Sigma2,
            "mu_d" => FreeParam::MuD,
            "mu_s" => FreeParam::MuS,
            "v_s" => FreeParam::VStribeck,
            "delta" => FreeParam::Delta,
            "eps" => FreeParam::Eps,
            _ => return None,
        })
    }
}

/// A fitted parameter with its search bounds.
#[derive(Debug, Clone, Copy)]
pub struct BoundedParam {
    pub which: FreeParam,
    pub lo: f64,
    pub hi: f64,
}

/// Everything needed to evaluate a candidate against the reference data.
#[derive(Debug, Clone)]
pub struct CalibrationProblem {
    pub plant: PlantKind,
    pub model: ModelKind,
    pub input: InputSignal,
    /// Reference displacement samples `(t, x)`, SI units.
    pub reference: Vec<(f64, f64)>,
    pub free: Vec<BoundedParam>,
    /// Values of the parameters not being fitted.
    pub base: FrictionParams,
    pub integrator: IntegratorConfig,
}

#[derive(Debug, Clone, Error)]
pub enum CalibrationError {
    #[error("free parameter set is empty")]
    NoFreeParams,
    #[error("evaluation budget {budget} is below the population size {population}")]
    BudgetTooSmall { budget: usize, population: usize },
    #[error("bounds for {name} must be finite with lo < hi, got [{lo}, {hi}]")]
    BadBounds { name: &'static str, lo: f64, hi: f64 },
    #[error("reference series must be non-empty with times inside [0, t_end]")]
    BadReference,
}

/// GA hyperparameters; the defaults are tuned for 1-3 dimensional fits
/// within a ~2000 evaluation budget.
#[derive(Debug, Clone, Copy)]
pub struct GaSettings {
    pub population: usize,
    pub crossover_rate: f64,
    /// Per-gene mutation probability.
    pub mutation_rate: f64,
    /// Gaussian mutation sigma as a fraction of the box width.
    pub mutation_sigma_frac: f64,
    pub tournament: usize,
}

impl Default for GaSettings {
    fn default() -> Self {
        Self {
            population: 40,
            crossover_rate: 0.9,
            mutation_rate: 0.25,
            mutation_sigma_frac: 0.05,
            tournament: 3,
        }
    }
}

/// Fit outcome with the Table-of-indicators set recomputed from the final
/// residual vector.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub best: FrictionParams,
    pub best_genes: Vec<f64>,
    /// Root-mean-square of the displacement residuals, m.
    pub rmse: f64,
    pub mean_err: f64,
    pub std_err: f64,
    pub max_err: f64,
    pub evaluations: usize,
    pub seed: u64,
    /// Signed residuals x_sim - x_ref at the reference times.
    pub residuals: Vec<f64>,
    /// Best objective after each generation (non-increasing).
    pub best_history: Vec<f64>,
}

fn apply_genes(
    base: &FrictionParams,
    free: &[BoundedParam],
    genes: &[f64],
) -> Result<FrictionParams, crate::friction::ParamError> {
    let mut f = *base;
    for (bp, &g) in free.iter().zip(genes) {
        match bp.which {
            FreeParam::Sigma0 => f.sigma0 = g,
            FreeParam::Sigma1 => f.sigma1 = g,
            FreeParam::Sigma2 => f.sigma2 = g,
            FreeParam::MuD => f.mu_d = g,
            FreeParam::MuS => f.mu_s = g,
            FreeParam::VStribeck => f.v_s = g,
            FreeParam::Delta => f.delta = g,
            FreeParam::Eps => f.eps = g,
        }
    }
    FrictionParams::new(f.mu_d, f.mu_s, f.v_s, f.delta, f.sigma2, f.eps, f.sigma0, f.sigma1)
}

/// Simulates the plant and returns signed residuals at the reference times
/// (linear interpolation of the simulated displacement).
pub fn residuals(
    candidate: &FrictionParams,
    problem: &CalibrationProblem,
) -> Result<Vec<f64>, SimError> {
    let (ts, xs): (Vec<f64>, Vec<f64>) = match &problem.plant {
        PlantKind::Valve(vp) => {
            let tr = simulate_valve(
                &problem.input,
                vp,
                candidate,
                problem.model,
                &problem.integrator,
            )?;
            tr.records.iter().map(|r| (r.t, r.x)).unzip()
        }
        PlantKind::MassSpring(ms) => {
            let tr = simulate_stickslip_driven(
                ms,
                &problem.input,
                candidate,
                problem.model,
                &problem.integrator,
            )?;
            tr.records.iter().map(|r| (r.t, r.x)).unzip()
        }
    };
    let interp = |t: f64| -> f64 {
        let i = ts.partition_point(|&tk| tk <= t);
        if i == 0 {
            return xs[0];
        }
        if i >= ts.len() {
            return *xs.last().unwrap();
        }
        let (t0, t1) = (ts[i - 1], ts[i]);
        let (x0, x1) = (xs[i - 1], xs[i]);
        x0 + (x1 - x0) * (t - t0) / (t1 - t0)
    };
    Ok(problem
        .reference
        .iter()
        .map(|&(t, x_ref)| interp(t) - x_ref)
        .collect())
}

fn rms(res: &[f64]) -> f64 {
    (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt()
}

/// RMSE of a candidate; simulation or validation failure maps to +inf
/// (candidate rejected).
pub fn objective(candidate: &FrictionParams, problem: &CalibrationProblem) -> f64 {
    match residuals(candidate, problem) {
        Ok(r) if !r.is_empty() => {
            let v = rms(&r);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        }
        _ => f64::INFINITY,
    }
}

fn objective_genes(genes: &[f64], problem: &CalibrationProblem) -> f64 {
    match apply_genes(&problem.base, &problem.free, genes) {
        Ok(params) => objective(&params, problem),
        Err(_) => f64::INFINITY,
    }
}

/// Deterministic per-(seed, generation, index) RNG stream, so concurrent
/// evaluation cannot perturb reproducibility.
fn stream_rng(seed: u64, generation: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((generation << 24) ^ index);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller on open-interval uniforms
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Runs the genetic algorithm within `budget` objective evaluations.
/// Reproducible for a fixed seed regardless of thread count.
pub fn fit(
    problem: &CalibrationProblem,
    budget: usize,
    seed: u64,
) -> Result<FitResult, CalibrationError> {
    fit_with(problem, budget, seed, &GaSettings::default())
}

pub fn fit_with(
    problem: &CalibrationProblem,
    budget: usize,
    seed: u64,
    ga: &GaSettings,
) -> Result<FitResult, CalibrationError> {
    if problem.free.is_empty() {
        return Err(CalibrationError::NoFreeParams);
    }
    for bp in &problem.free {
        if !(bp.lo.is_finite() && bp.hi.is_finite() && bp.lo < bp.hi) {
            return Err(CalibrationError::BadBounds {
                name: bp.which.name(),
                lo: bp.lo,
                hi: bp.hi,
            });
        }
    }
    if problem.reference.is_empty()
        || problem
            .reference
            .iter()
            .any(|&(t, _)| t < 0.0 || t > problem.integrator.t_end)
    {
        return Err(CalibrationError::BadReference);
    }
    if budget < ga.population {
        return Err(CalibrationError::BudgetTooSmall {
            budget,
            population: ga.population,
        });
    }

    let dim = problem.free.len();
    let mut population: Vec<Vec<f64>> = (0..ga.population)
        .map(|i| {
            let mut rng = stream_rng(seed, 0, i as u64);
            problem
                .free
                .iter()
                .map(|bp| rng.random_range(bp.lo..=bp.hi))
                .collect()
        })
        .collect();
    let mut fitness: Vec<f64> = population
        .par_iter()
        .map(|genes| objective_genes(genes, problem))
        .collect();
    let mut evaluations = ga.population;
    let mut best_history = Vec::new();

    let best_index = |fit: &[f64]| {
        fit.iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(i, _)| i)
            .unwrap()
    };
    best_history.push(fitness[best_index(&fitness)]);

    let offspring_per_gen = ga.population - 1; // elitism of 1
    let mut generation = 1u64;
    while evaluations + offspring_per_gen <= budget {
        let elite = best_index(&fitness);
        let mut next_pop: Vec<Vec<f64>> = Vec::with_capacity(ga.population);
        let mut next_fit: Vec<f64> = Vec::with_capacity(ga.population);
        next_pop.push(population[elite].clone());
        next_fit.push(fitness[elite]);

        let offspring: Vec<Vec<f64>> = (0..offspring_per_gen)
            .map(|i| {
                let mut rng = stream_rng(seed, generation, i as u64);
                let pick = |rng: &mut ChaCha8Rng| -> usize {
                    let mut best = rng.random_range(0..ga.population);
                    for _ in 1..ga.tournament {
                        let c = rng.random_range(0..ga.population);
                        if fitness[c] < fitness[best] {
                            best = c;
                        }
                    }
                    best
                };
                let pa = &population[pick(&mut rng)];
                let pb = &population[pick(&mut rng)];
                let mut child = vec![0.0; dim];
                let cross = rng.random::<f64>() < ga.crossover_rate;
                for d in 0..dim {
                    let bp = &problem.free[d];
                    let mut gene = if cross {
                        // blend crossover (BLX-0.5)
                        let lo = pa[d].min(pb[d]);
                        let hi = pa[d].max(pb[d]);
                        let spread = (hi - lo).max(1e-12 * (bp.hi - bp.lo));
                        rng.random_range((lo - 0.5 * spread)..=(hi + 0.5 * spread))
                    } else {
                        pa[d]
                    };
                    if rng.random::<f64>() < ga.mutation_rate {
                        gene += gaussian(&mut rng) * ga.mutation_sigma_frac * (bp.hi - bp.lo);
                    }
                    child[d] = gene.clamp(bp.lo, bp.hi);
                }
                child
            })
            .collect();
        let offspring_fit: Vec<f64> = offspring
            .par_iter()
            .map(|genes| objective_genes(genes, problem))
            .collect();
        evaluations += offspring_per_gen;
        next_pop.extend(offspring);
        next_fit.extend(offspring_fit);
        population = next_pop;
        fitness = next_fit;
        best_history.push(fitness[best_index(&fitness)]);
        generation += 1;
    }

    let best = best_index(&fitness);
    let best_genes = population[best].clone();
    let best_params = apply_genes(&problem.base, &problem.free, &best_genes)
        .expect("the best candidate was evaluated with finite objective");
    let res = residuals(&best_params, problem).unwrap_or_default();
    let n = res.len().max(1) as f64;
    let mean = res.iter().sum::<f64>() / n;
    let std = (res.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n).sqrt();
    let max = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(FitResult {
        best: best_params,
        best_genes,
        rmse: rms(&res),
        mean_err: mean,
        std_err: std,
        max_err: max,
        evaluations,
        seed,
        residuals: res,
        best_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn quick_problem() -> CalibrationProblem {
        // small mass-spring fit so unit tests stay fast
        let base = FrictionParams::new(1.0, 1.5, 0.01, 2.0, 0.04, 0.0, 100.0, 5.0).unwrap();
        let ms = MassSpringParams {
            m: 1.0,
            k: 4.0,
            v_ref: 0.1,
            p: 1.0,
        };
        let input = InputSignal::Constant(0.1);
        let cfg = IntegratorConfig {
            out_dt: Some(0.02),
            ..IntegratorConfig::rk45(2.0)
        };
        let truth = base;
        let tr = simulate_stickslip_driven(&ms, &input, &truth, ModelKind::Frbd, &cfg).unwrap();
        let reference: Vec<(f64, f64)> = tr.records.iter().map(|r| (r.t, r.x)).collect();
        CalibrationProblem {
            plant: PlantKind::MassSpring(ms),
            model: ModelKind::Frbd,
            input,
            reference,
            free: vec![BoundedParam {
                which: FreeParam::Sigma1,
                lo: 0.1,
                hi: 50.0,
            }],
            base,
            integrator: cfg,
        }
    }

    #[test]
    fn self_residual_is_tiny() {
        let problem = quick_problem();
        let rmse = objective(&problem.base, &problem);
        assert!(rmse < 1e-8, "self-residual rmse = {rmse}");
    }

    #[test]
    fn constant_offset_shifts_rmse() {
        let mut problem = quick_problem();
        for r in problem.reference.iter_mut() {
            r.1 += 1e-3;
        }
        let rmse = objective(&problem.base, &problem);
        assert!((rmse - 1e-3).abs() < 1e-9, "rmse = {rmse}");
    }

    #[test]
    fn invalid_candidate_rejected() {
        let problem = quick_problem();
        let mut bad = problem.base;
        bad.mu_s = 0.5; // below mu_d
        let genes = vec![5.0];
        let broken = apply_genes(&bad, &problem.free, &genes);
        assert!(broken.is_err());
        assert_eq!(
            objective_genes(&[f64::NAN], &problem),
            f64::INFINITY
        );
    }

    #[test]
    fn fit_is_deterministic_and_monotone() {
        let problem = quick_problem();
        let a = fit(&problem, 120, 7).unwrap();
        let b = fit(&problem, 120, 7).unwrap();
        assert_eq!(a.best_genes, b.best_genes);
        assert_eq!(a.rmse, b.rmse);
        assert_eq!(a.evaluations, b.evaluations);
        for w in a.best_history.windows(2) {
            assert!(w[1] <= w[0], "best-so-far must be non-increasing");
        }
        // indicator consistency
        let n = a.residuals.len() as f64;
        let rmse2 = a.residuals.iter().map(|r| r * r).sum::<f64>() / n;
        assert!((a.rmse * a.rmse - rmse2).abs() < 1e-12);
        assert!(
            (a.rmse * a.rmse - (a.mean_err * a.mean_err + a.std_err * a.std_err)).abs() < 1e-12
        );
        assert!(a.max_err >= a.rmse);
    }

    #[test]
    fn fit_rejects_bad_setups() {
        let mut problem = quick_problem();
        assert!(matches!(
            fit(&problem, 10, 0),
            Err(CalibrationError::BudgetTooSmall { .. })
        ));
        problem.free.clear();
        assert!(matches!(
            fit(&problem, 1000, 0),
            Err(CalibrationError::NoFreeParams)
        ));
        let mut problem = quick_problem();
        problem.free[0].hi = problem.free[0].lo;
        assert!(matches!(
            fit(&problem, 1000, 0),
            Err(CalibrationError::BadBounds { .. })
        ));
        let mut problem = quick_problem();
        problem.reference.push((1e9, 0.0));
        assert!(matches!(
            fit(&problem, 1000, 0),
            Err(CalibrationError::BadReference)
        ));
    }

    #[test]
    fn bounds_respected_by_search() {
        let problem = quick_problem();
        let r = fit(&problem, 120, 3).unwrap();
        for (bp, g) in problem.free.iter().zip(&r.best_genes) {
            assert!(*g >= bp.lo && *g <= bp.hi);
        }
        // and the valve plant path compiles / runs
        let _ = presets::diaphragm_valve(true);
    }
}
