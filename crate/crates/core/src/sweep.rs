//! Disorder sampling, realization runs and steady-state averaging.
//!
//! Every realization draws its fields from its own ChaCha20 stream, keyed
//! by `(master seed, L)` with stream id `(disorder index << 32) | realization`.
//! Any realization can therefore be rerun in isolation, and a sweep's
//! output does not depend on how realizations are scheduled over threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::config::{Backend, SweepConfig};
use crate::environment::{prepare_environment, EnvironmentKind};
use crate::error::{domain, Result};
use crate::full_space::full_space_holevo_trace;
use crate::hamiltonian::DisorderedChainSpec;
use crate::holevo::{holevo_rate_trace_streaming, MessageEnsemble};

/// Identifies one disorder realization within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RealizationKey {
    pub master_seed: u64,
    pub size: usize,
    pub disorder_index: usize,
    pub realization: usize,
}

impl RealizationKey {
    pub fn stream(&self) -> u64 {
        ((self.disorder_index as u64) << 32) | self.realization as u64
    }

    pub fn rng(&self) -> ChaCha20Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&(self.size as u64).to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(seed);
        rng.set_stream(self.stream());
        rng
    }
}

/// `sites` independent fields uniform on `[−h, h]`.
pub fn sample_fields(h: f64, sites: usize, key: &RealizationKey) -> Vec<f64> {
    if h == 0.0 {
        return vec![0.0; sites];
    }
    let mut rng = key.rng();
    (0..sites).map(|_| h * (2.0 * rng.random::<f64>() - 1.0)).collect()
}

/// Sampling times for one ring length.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    pub times: Vec<f64>,
    pub t0: f64,
    pub t1: f64,
}

impl TimeGrid {
    /// `t = 0`, then `transient_points` log-spaced times covering
    /// `transient_decades` below `T₀`, then `window_points` uniform times on
    /// `[T₀, T₁]`.
    pub fn new(
        t0: f64,
        t1: f64,
        transient_points: usize,
        transient_decades: f64,
        window_points: usize,
    ) -> Result<Self> {
        if !(t0 > 0.0 && t1 > t0) || window_points < 2 {
            return Err(domain(format!(
                "invalid time window [{t0}, {t1}] with {window_points} points"
            )));
        }
        let mut times = Vec::with_capacity(1 + transient_points + window_points);
        times.push(0.0);
        for i in 0..transient_points {
            let exponent = -transient_decades * (1.0 - i as f64 / transient_points as f64);
            times.push(t0 * 10f64.powf(exponent));
        }
        let step = (t1 - t0) / (window_points - 1) as f64;
        for i in 0..window_points {
            times.push(if i + 1 == window_points {
                t1
            } else {
                t0 + step * i as f64
            });
        }
        Ok(Self { times, t0, t1 })
    }

    pub fn for_size(config: &SweepConfig, size: usize) -> Result<Self> {
        let (t0, t1) = config.window(size);
        let g = &config.grid;
        Self::new(t0, t1, g.transient_points, g.transient_decades, g.window_points)
    }
}

/// `1/(T₁−T₀) ∫_{T₀}^{T₁} R(t) dt` with the trapezoid rule on the
/// piecewise-linear interpolant of `(times, values)`.
pub fn steady_state_average(times: &[f64], values: &[f64], t0: f64, t1: f64) -> Result<f64> {
    if times.len() != values.len() {
        return Err(domain("times and values differ in length"));
    }
    if !(t1 > t0) {
        return Err(domain(format!("empty averaging window [{t0}, {t1}]")));
    }
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Err(domain("empty time series"));
    };
    let slack = 1e-12 * t1.abs().max(1.0);
    if first > t0 + slack || last < t1 - slack {
        return Err(domain(format!(
            "grid [{first}, {last}] does not cover the window [{t0}, {t1}]"
        )));
    }
    let inside = times.iter().filter(|&&t| t >= t0 - slack && t <= t1 + slack).count();
    if inside < 8 {
        return Err(domain(format!(
            "only {inside} grid points inside the window, need at least 8"
        )));
    }
    let interpolate = |(ta, ya): (f64, f64), (tb, yb): (f64, f64), t: f64| {
        if tb == ta {
            ya
        } else {
            ya + (yb - ya) * (t - ta) / (tb - ta)
        }
    };
    let mut integral = 0.0;
    for i in 1..times.len() {
        let a = (times[i - 1], values[i - 1]);
        let b = (times[i], values[i]);
        let lo = a.0.max(t0);
        let hi = b.0.min(t1);
        if hi > lo {
            integral += 0.5 * (interpolate(a, b, lo) + interpolate(a, b, hi)) * (hi - lo);
        }
    }
    Ok(integral / (t1 - t0))
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// `s / √n` with the `n − 1` sample deviation; NaN when `n = 1`.
    pub stderr: f64,
    pub samples: usize,
}

pub fn disorder_average(samples: &[f64]) -> Result<Summary> {
    let n = samples.len();
    if n == 0 {
        return Err(domain("cannot average zero samples"));
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let stderr = if n == 1 {
        f64::NAN
    } else {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    };
    Ok(Summary {
        mean,
        stderr,
        samples: n,
    })
}

/// One unit of sweep work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub size: usize,
    pub message_sites: usize,
    pub environment: EnvironmentKind,
    pub disorder: f64,
    pub key: RealizationKey,
}

/// Rate time series of one disorder realization.
#[derive(Debug, Clone, PartialEq)]
pub struct HolevoTrace {
    pub job: Job,
    pub fields: Vec<f64>,
    pub times: Vec<f64>,
    pub rates: Vec<f64>,
    /// Time average of `rates` over `[T₀, T₁]`.
    pub steady_state: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationFailure {
    pub job: Job,
    pub message: String,
}

pub type RealizationOutcome = std::result::Result<HolevoTrace, RealizationFailure>;

/// Disorder-averaged steady state at one `(L, l, h, environment)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateRecord {
    pub size: usize,
    pub message_sites: usize,
    pub environment: EnvironmentKind,
    pub disorder: f64,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Disorder-averaged `R̄(t)` at one `(L, l, h, environment)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedTrace {
    pub size: usize,
    pub message_sites: usize,
    pub environment: EnvironmentKind,
    pub disorder: f64,
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
}

/// All jobs of a sweep in canonical order: size, environment, disorder,
/// realization.
pub fn jobs(config: &SweepConfig) -> Vec<Job> {
    let mut jobs = Vec::new();
    for &size in &config.physics.sizes {
        let message_sites = config.message_sites(size);
        for &environment in &config.physics.environments {
            for (disorder_index, &disorder) in config.physics.disorder.iter().enumerate() {
                for realization in 0..config.realizations(size) {
                    jobs.push(Job {
                        size,
                        message_sites,
                        environment,
                        disorder,
                        key: RealizationKey {
                            master_seed: config.sampling.seed,
                            size,
                            disorder_index,
                            realization,
                        },
                    });
                }
            }
        }
    }
    jobs
}

/// Fields → ring and environment Hamiltonians → environment state →
/// Holevo rate on the grid → steady-state average.
pub fn run_realization(config: &SweepConfig, job: &Job) -> Result<HolevoTrace> {
    let fields = sample_fields(job.disorder, job.size, &job.key);
    let spec = DisorderedChainSpec::new(job.message_sites, fields, config.physics.coupling)?;
    let grid = TimeGrid::for_size(config, job.size)?;
    let ensemble = MessageEnsemble::uniform(job.message_sites)?;
    let t_neel = config.t_neel(job.size);
    let samples = match config.physics.backend {
        Backend::Blocked => {
            let env = prepare_environment(job.environment, &spec, t_neel)?;
            holevo_rate_trace_streaming(&spec, &env, &ensemble, &grid.times)?
        }
        Backend::FullSpace => full_space_holevo_trace(&spec, job.environment, t_neel, &ensemble, &grid.times)?,
    };
    let rates: Vec<f64> = samples.iter().map(|s| s.rate).collect();
    let steady_state = steady_state_average(&grid.times, &rates, grid.t0, grid.t1)?;
    Ok(HolevoTrace {
        job: *job,
        fields: spec.fields().to_vec(),
        times: grid.times,
        rates,
        steady_state,
    })
}

/// Everything a sweep produced, in canonical job order.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub config_hash: String,
    pub outcomes: Vec<RealizationOutcome>,
}

impl SweepOutput {
    pub fn failures(&self) -> impl Iterator<Item = &RealizationFailure> {
        self.outcomes.iter().filter_map(|o| o.as_ref().err())
    }

    pub fn traces(&self) -> impl Iterator<Item = &HolevoTrace> {
        self.outcomes.iter().filter_map(|o| o.as_ref().ok())
    }

    pub fn failure_fraction(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.failures().count() as f64 / self.outcomes.len() as f64
    }

    /// Successful traces grouped by `(L, environment, disorder)` in
    /// canonical order.
    fn groups(&self) -> Vec<Vec<&HolevoTrace>> {
        let mut groups: Vec<Vec<&HolevoTrace>> = Vec::new();
        let mut last = None;
        for trace in self.traces() {
            let key = (trace.job.size, trace.job.environment, trace.job.key.disorder_index);
            if last != Some(key) {
                groups.push(Vec::new());
                last = Some(key);
            }
            groups.last_mut().expect("group pushed above").push(trace);
        }
        groups
    }

    pub fn aggregate(&self) -> Vec<SteadyStateRecord> {
        self.groups()
            .into_iter()
            .map(|group| {
                let job = group[0].job;
                let values: Vec<f64> = group.iter().map(|t| t.steady_state).collect();
                let summary = disorder_average(&values).expect("groups are non-empty");
                SteadyStateRecord {
                    size: job.size,
                    message_sites: job.message_sites,
                    environment: job.environment,
                    disorder: job.disorder,
                    mean: summary.mean,
                    stderr: summary.stderr,
                    samples: summary.samples,
                }
            })
            .collect()
    }

    pub fn averaged_traces(&self) -> Vec<AveragedTrace> {
        self.groups()
            .into_iter()
            .map(|group| {
                let job = group[0].job;
                let times = group[0].times.clone();
                let (mean, stderr) = (0..times.len())
                    .map(|i| {
                        let column: Vec<f64> = group.iter().map(|t| t.rates[i]).collect();
                        let s = disorder_average(&column).expect("groups are non-empty");
                        (s.mean, s.stderr)
                    })
                    .unzip();
                AveragedTrace {
                    size: job.size,
                    message_sites: job.message_sites,
                    environment: job.environment,
                    disorder: job.disorder,
                    times,
                    mean,
                    stderr,
                    samples: group.len(),
                }
            })
            .collect()
    }
}

/// Runs every realization of `config` on the current rayon pool.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    run_sweep_with(config, |_| {})
}

/// As [`run_sweep`], calling `progress` after each finished realization.
pub fn run_sweep_with(config: &SweepConfig, progress: impl Fn(&RealizationOutcome) + Sync) -> Result<SweepOutput> {
    config.validate()?;
    let outcomes = jobs(config)
        .par_iter()
        .map(|job| {
            let outcome = run_realization(config, job).map_err(|e| RealizationFailure {
                job: *job,
                message: e.to_string(),
            });
            progress(&outcome);
            outcome
        })
        .collect();
    Ok(SweepOutput {
        config_hash: config.hash(),
        outcomes,
    })
}
