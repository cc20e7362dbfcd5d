//! GP-UCB loop with regret accounting.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::benchmarks::Benchmark;
use crate::error::{Error, Result};
use crate::gp::{fit_hyperparams, fit_posterior, Dataset, FitOptions, GpKernel, Hyperparams, Posterior};
use crate::kernels::{Family, Invariance, KernelSpec, Mode};

pub const BETA_COEFFICIENT: f64 = 0.5;

/// `μ + √β_t·√max(0, σ²)` with `β_t = 0.5·d·ln t`.
pub fn ucb_score(mean: f64, variance: f64, t: f64, d: usize) -> f64 {
    ucb_score_with(BETA_COEFFICIENT, mean, variance, t, d)
}

pub fn ucb_score_with(beta_coefficient: f64, mean: f64, variance: f64, t: f64, d: usize) -> f64 {
    let beta = (beta_coefficient * d as f64 * t.ln()).max(0.0);
    mean + beta.sqrt() * variance.max(0.0).sqrt()
}

/// Knobs of the acquisition maximizer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcquisitionOptions {
    /// Ascent restarts taken from the best uniform candidates.
    pub m_starts: usize,
    /// Uniform candidates scored before the ascent; `None` means `max(64, n)`.
    pub candidates: Option<usize>,
    pub ascent_steps: usize,
    /// Initial step as a fraction of each box side.
    pub step_fraction: f64,
}

impl Default for AcquisitionOptions {
    fn default() -> Self {
        Self {
            m_starts: 10,
            candidates: None,
            ascent_steps: 50,
            step_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoConfig {
    pub benchmark: String,
    pub mode: Mode,
    pub family: Family,
    pub seed: u64,
    pub n_init: usize,
    pub n_iters: usize,
    pub beta_coefficient: f64,
    /// Observation noise variance as a fraction of the objective's variance
    /// over the box.
    pub noise_fraction: f64,
    pub acquisition: AcquisitionOptions,
    pub fit_restarts: usize,
    pub fit_max_iters: usize,
}

impl BoConfig {
    pub fn new(benchmark: impl Into<String>, mode: Mode, family: Family, seed: u64) -> Self {
        Self {
            benchmark: benchmark.into(),
            mode,
            family,
            seed,
            n_init: 5,
            n_iters: 50,
            beta_coefficient: BETA_COEFFICIENT,
            noise_fraction: 0.02,
            acquisition: AcquisitionOptions::default(),
            fit_restarts: 4,
            fit_max_iters: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_init == 0 {
            return Err(Error::InvalidParameter("n_init must be ≥ 1".into()));
        }
        if !(self.noise_fraction >= 0.0) || !self.noise_fraction.is_finite() {
            return Err(Error::InvalidParameter("noise_fraction must be ≥ 0".into()));
        }
        if !(self.beta_coefficient >= 0.0) {
            return Err(Error::InvalidParameter("beta_coefficient must be ≥ 0".into()));
        }
        if self.acquisition.m_starts == 0 || self.acquisition.ascent_steps == 0 {
            return Err(Error::InvalidParameter("acquisition needs ≥ 1 start and ≥ 1 step".into()));
        }
        if !(self.acquisition.step_fraction > 0.0) {
            return Err(Error::InvalidParameter("step_fraction must be > 0".into()));
        }
        Ok(())
    }
}

/// One evaluation of the objective.
#[derive(Clone, Debug, PartialEq)]
pub struct BoRecord {
    /// 1-based evaluation index; the initial design occupies `1..=n_init`.
    pub t: usize,
    pub x: Vec<f64>,
    /// Noisy observation seen by the optimizer.
    pub y: f64,
    /// Noise-free objective value.
    pub f_true: f64,
    pub instantaneous_regret: f64,
    pub cumulative_regret: f64,
    pub simple_regret: f64,
    /// Fitted hyperparameters in the units of `y`; `None` for the initial design.
    pub hyperparams: Option<Hyperparams<f64>>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoSummary {
    pub cumulative_regret: f64,
    pub simple_regret: f64,
    pub average_regret: f64,
    pub best_value: f64,
    /// The optimum regret is measured against: the known maximum, or the
    /// best noise-free value seen in this run.
    pub reference_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoTrace {
    pub benchmark: String,
    pub mode: Mode,
    pub family: Family,
    pub seed: u64,
    pub noise_variance: f64,
    pub records: Vec<BoRecord>,
    pub warnings: Vec<String>,
    pub summary: BoSummary,
}

impl BoTrace {
    /// Equality ignoring wall-clock timings.
    pub fn same_run(&self, other: &Self) -> bool {
        let strip = |t: &Self| {
            let mut t = t.clone();
            for r in &mut t.records {
                r.wall_ms = 0.0;
            }
            t
        };
        strip(self) == strip(other)
    }
}

/// Projected ascent of `acq` over the box from each start; returns the best
/// point and value. Each step moves along a central-difference gradient
/// normalised per coordinate to the box side, halving the step on failure.
pub fn maximize_acquisition<F>(
    acq: &F,
    lower: &[f64],
    upper: &[f64],
    starts: &[Vec<f64>],
    options: &AcquisitionOptions,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let d = lower.len();
    let width: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| u - l).collect();
    let clip = |x: &mut [f64]| {
        for i in 0..d {
            x[i] = x[i].clamp(lower[i], upper[i]);
        }
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut probe = vec![0.0; d];
    for start in starts {
        let mut x = start.clone();
        clip(&mut x);
        let mut fx = acq(&x);
        let mut step = options.step_fraction;
        for _ in 0..options.ascent_steps {
            let h = (1e-3 * step).max(1e-7);
            let mut grad = vec![0.0; d];
            for i in 0..d {
                probe.copy_from_slice(&x);
                probe[i] = (x[i] + h * width[i]).min(upper[i]);
                let hi = acq(&probe);
                let up = probe[i];
                probe[i] = (x[i] - h * width[i]).max(lower[i]);
                let lo = acq(&probe);
                let span = up - probe[i];
                grad[i] = if span > 0.0 { (hi - lo) / span * width[i] } else { 0.0 };
            }
            let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if !(scale > 0.0) || !scale.is_finite() {
                break;
            }
            let mut improved = false;
            while step > 1e-6 {
                let mut cand: Vec<f64> = (0..d).map(|i| x[i] + step * width[i] * grad[i] / scale).collect();
                clip(&mut cand);
                let fc = acq(&cand);
                if fc > fx {
                    x = cand;
                    fx = fc;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        if fx.is_finite() && best.as_ref().is_none_or(|(_, b)| fx > *b) {
            best = Some((x, fx));
        }
    }
    best.unwrap_or_else(|| {
        let mid: Vec<f64> = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
        let v = acq(&mid);
        (mid, v)
    })
}

/// Maximizes GP-UCB at step `t`: scores `max(64, n)` uniform candidates,
/// ascends from the `m_starts` best of them plus `incumbent`, and returns
/// the best point found. Always inside the box.
pub fn propose_next<R: Rng + ?Sized>(
    posterior: &Posterior<f64>,
    lower: &[f64],
    upper: &[f64],
    t: usize,
    beta_coefficient: f64,
    incumbent: Option<&[f64]>,
    options: &AcquisitionOptions,
    rng: &mut R,
) -> Vec<f64> {
    let d = lower.len();
    let acq = |x: &[f64]| match posterior.predict(x) {
        Ok((m, v)) => ucb_score_with(beta_coefficient, m, v, t as f64, d),
        Err(_) => f64::NEG_INFINITY,
    };
    let m = options.candidates.unwrap_or_else(|| 64.max(posterior.inputs().len()));
    let mut scored: Vec<(f64, Vec<f64>)> = (0..m.max(1))
        .map(|_| {
            let x: Vec<f64> = lower.iter().zip(upper).map(|(&l, &u)| rng.random_range(l..=u)).collect();
            (acq(&x), x)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut starts: Vec<Vec<f64>> = scored.into_iter().take(options.m_starts).map(|(_, x)| x).collect();
    if let Some(inc) = incumbent {
        starts.push(inc.to_vec());
    }
    maximize_acquisition(&acq, lower, upper, &starts, options).0
}

/// Runs GP-UCB on a named benchmark.
pub fn run_bo(config: &BoConfig) -> Result<BoTrace> {
    let bench = Benchmark::by_name(&config.benchmark)?;
    run_bo_on(&bench, config)
}

/// Runs GP-UCB on `bench`. Per-iteration fitting failures are recorded as
/// warnings and replaced by a uniform proposal; they never abort the run.
pub fn run_bo_on(bench: &Benchmark, config: &BoConfig) -> Result<BoTrace> {
    config.validate()?;
    let invariance = Invariance::new(config.mode, Some(bench.group.clone()))?;
    let noise_variance = config.noise_fraction * bench.signal_variance();
    let noise = Normal::new(0.0, noise_variance.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;

    let mut design_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    noise_rng.set_stream(1);

    let mut xs: Vec<Vec<f64>> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut records: Vec<BoRecord> = Vec::new();
    let mut warnings = Vec::new();
    let mut observe = |x: Vec<f64>, hp: Option<Hyperparams<f64>>, started: Instant, records: &mut Vec<BoRecord>| {
        let f_true = bench.evaluate(&x);
        let y = f_true + noise.sample(&mut noise_rng);
        records.push(BoRecord {
            t: records.len() + 1,
            x,
            y,
            f_true,
            instantaneous_regret: 0.0,
            cumulative_regret: 0.0,
            simple_regret: 0.0,
            hyperparams: hp,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
        y
    };

    for _ in 0..config.n_init {
        let started = Instant::now();
        let x = bench.sample_uniform(&mut design_rng);
        xs.push(x.clone());
        ys.push(observe(x, None, started, &mut records));
    }

    let fit_options = |init: Option<Hyperparams<f64>>, t: usize| FitOptions {
        restarts: config.fit_restarts,
        max_iters: config.fit_max_iters,
        domain_diagonal: bench.diagonal(),
        init,
        seed: config.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(t as u64),
    };
    let mut warm: Option<Hyperparams<f64>> = None;

    for iter in 1..=config.n_iters {
        let started = Instant::now();
        // Scaled but not centered: the GP keeps a zero prior mean in the
        // units of y.
        let sd = output_scale(&ys);
        let z: Vec<f64> = ys.iter().map(|v| v / sd).collect();
        let data = Dataset::new(xs.clone(), z, 1.0)?;

        let fitted = fit_hyperparams(&data, config.family, invariance.clone(), &fit_options(warm, iter))
            .and_then(|fit| {
                if let Some(w) = &fit.warning {
                    warnings.push(format!("t={}: {w}", xs.len() + 1));
                }
                let hp = fit.hyperparams;
                let spec = KernelSpec::new(config.family, hp.lengthscale, hp.signal_variance, invariance.clone())?;
                let kernel = GpKernel::build(&spec, &xs)?;
                let post = fit_posterior(kernel, &Dataset::new(xs.clone(), data.y.clone(), hp.noise_variance)?)?;
                Ok((hp, post))
            });

        let incumbent = ys
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| xs[i].clone());
        let (x, hp) = match fitted {
            Ok((hp, post)) => {
                warm = Some(hp);
                let x = propose_next(
                    &post,
                    &bench.lower,
                    &bench.upper,
                    iter,
                    config.beta_coefficient,
                    incumbent.as_deref(),
                    &config.acquisition,
                    &mut design_rng,
                );
                let scaled = Hyperparams {
                    signal_variance: hp.signal_variance * sd * sd,
                    lengthscale: hp.lengthscale,
                    noise_variance: hp.noise_variance * sd * sd,
                };
                (x, Some(scaled))
            }
            Err(e) => {
                warnings.push(format!("t={}: GP fit failed ({e}); sampled uniformly", xs.len() + 1));
                warm = None;
                (bench.sample_uniform(&mut design_rng), None)
            }
        };
        xs.push(x.clone());
        ys.push(observe(x, hp, started, &mut records));
    }

    let best_value = records.iter().map(|r| r.f_true).fold(f64::NEG_INFINITY, f64::max);
    let reference_max = bench.known_max.unwrap_or(best_value);
    let mut cumulative = 0.0;
    let mut best_so_far = f64::NEG_INFINITY;
    for r in &mut records {
        r.instantaneous_regret = reference_max - r.f_true;
        cumulative += r.instantaneous_regret;
        r.cumulative_regret = cumulative;
        best_so_far = best_so_far.max(r.f_true);
        r.simple_regret = reference_max - best_so_far;
    }
    let summary = BoSummary {
        cumulative_regret: cumulative,
        simple_regret: records.last().map_or(0.0, |r| r.simple_regret),
        average_regret: cumulative / records.len() as f64,
        best_value,
        reference_max,
    };
    Ok(BoTrace {
        benchmark: bench.name.clone(),
        mode: config.mode,
        family: config.family,
        seed: config.seed,
        noise_variance,
        records,
        warnings,
        summary,
    })
}

/// Sample standard deviation of `y`, or 1 when it is zero or undefined.
fn output_scale(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = if y.len() > 1 {
        y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let sd = var.sqrt();
    if sd > 1e-12 && sd.is_finite() {
        sd
    } else {
        1.0
    }
}
