//! Finite-size scaling of the steady-state rate.
//!
//! The ansatz is `R̄_SS ≈ L^{β/ν} f(L^{1/ν}(h − h_c))` at fixed `l/L`.
//! [`crossing_points`] estimates `h_c` from where curves of different sizes
//! intersect; [`fit_collapse`] then searches `(h_c, ν, β)` for the best
//! collapse onto a single master curve.

pub mod simplex;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AnalysisConfig, BetaMode, Ratio};
use crate::environment::EnvironmentKind;
use crate::error::{Error, Result};
use crate::sweep::SteadyStateRecord;
use simplex::{minimize, SimplexOptions};

/// Floor on every variance entering the collapse quality, so that
/// noiseless data still gives finite weights.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// `R̄_SS(h)` for one ring length, sorted by `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeCurve {
    pub size: usize,
    pub disorder: Vec<f64>,
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl SizeCurve {
    /// Sorts the points by `h`. A NaN standard error (single realization)
    /// is stored as zero.
    pub fn new(size: usize, points: impl IntoIterator<Item = (f64, f64, f64)>) -> Result<Self> {
        let mut points: Vec<(f64, f64, f64)> = points.into_iter().collect();
        if points
            .iter()
            .any(|&(h, v, s)| !h.is_finite() || !v.is_finite() || s.is_infinite() || s < 0.0)
        {
            return Err(analysis(format!(
                "non-finite or negative entry in the L = {size} curve"
            )));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(analysis(format!("repeated disorder value in the L = {size} curve")));
        }
        Ok(Self {
            size,
            disorder: points.iter().map(|p| p.0).collect(),
            value: points.iter().map(|p| p.1).collect(),
            stderr: points.iter().map(|p| if p.2.is_nan() { 0.0 } else { p.2 }).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.disorder.len()
    }

    pub fn is_empty(&self) -> bool {
        self.disorder.is_empty()
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn interpolate(&self, h: f64) -> Option<f64> {
        self.interpolate_column(&self.value, h)
    }

    fn interpolate_column(&self, column: &[f64], h: f64) -> Option<f64> {
        let (&lo, &hi) = (self.disorder.first()?, self.disorder.last()?);
        if h < lo || h > hi {
            return None;
        }
        let i = self.disorder.partition_point(|&x| x < h);
        if i < self.len() && self.disorder[i] == h {
            return Some(column[i]);
        }
        let (h0, h1) = (self.disorder[i - 1], self.disorder[i]);
        let (v0, v1) = (column[i - 1], column[i]);
        Some(v0 + (v1 - v0) * (h - h0) / (h1 - h0))
    }
}

fn analysis(msg: impl Into<String>) -> Error {
    Error::Analysis(msg.into())
}

/// Steady-state curves of at least two sizes with overlapping `h` ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingDataset {
    curves: Vec<SizeCurve>,
}

impl ScalingDataset {
    pub fn new(mut curves: Vec<SizeCurve>) -> Result<Self> {
        curves.retain(|c| !c.is_empty());
        curves.sort_by_key(|c| c.size);
        if curves.windows(2).any(|w| w[0].size == w[1].size) {
            return Err(analysis("two curves share a ring length"));
        }
        if curves.len() < 2 {
            return Err(analysis(format!(
                "scaling needs at least 2 ring lengths, got {}",
                curves.len()
            )));
        }
        let lo = curves.iter().map(|c| c.disorder[0]).fold(f64::MIN, f64::max);
        let hi = curves.iter().map(|c| c.disorder[c.len() - 1]).fold(f64::MAX, f64::min);
        if lo >= hi {
            return Err(analysis("the disorder ranges of the sizes do not overlap"));
        }
        Ok(Self { curves })
    }

    /// Records for one environment and message ratio.
    pub fn from_records(records: &[SteadyStateRecord], environment: EnvironmentKind, ratio: Ratio) -> Result<Self> {
        let mut by_size: BTreeMap<usize, Vec<(f64, f64, f64)>> = BTreeMap::new();
        for r in records {
            if r.environment == environment && Ratio::of(r.message_sites, r.size)? == ratio {
                by_size.entry(r.size).or_default().push((r.disorder, r.mean, r.stderr));
            }
        }
        let curves = by_size
            .into_iter()
            .map(|(size, pts)| SizeCurve::new(size, pts))
            .collect::<Result<_>>()?;
        Self::new(curves)
    }

    /// Noiseless data following the ansatz with master curve `master`,
    /// every point carrying standard error `stderr`.
    pub fn from_ansatz(
        sizes: &[usize],
        disorder: &[f64],
        (h_c, nu, beta): (f64, f64, f64),
        master: impl Fn(f64) -> f64,
        stderr: f64,
    ) -> Result<Self> {
        let curves = sizes
            .iter()
            .map(|&size| {
                let l = size as f64;
                SizeCurve::new(
                    size,
                    disorder.iter().map(|&h| {
                        let x = l.powf(1.0 / nu) * (h - h_c);
                        (h, l.powf(beta / nu) * master(x), stderr)
                    }),
                )
            })
            .collect::<Result<_>>()?;
        Self::new(curves)
    }

    pub fn curves(&self) -> &[SizeCurve] {
        &self.curves
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.curves.iter().map(|c| c.size).collect()
    }

    pub fn len(&self) -> usize {
        self.curves.iter().map(SizeCurve::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Points with `|h − center| ≤ half_width`. Curves left with fewer
    /// than two points are dropped.
    pub fn restrict(&self, center: f64, half_width: f64) -> Result<Self> {
        let tol = 1e-12 * half_width.abs().max(1.0);
        let curves = self
            .curves
            .iter()
            .map(|c| {
                SizeCurve::new(
                    c.size,
                    (0..c.len())
                        .filter(|&i| (c.disorder[i] - center).abs() <= half_width + tol)
                        .map(|i| (c.disorder[i], c.value[i], c.stderr[i])),
                )
            })
            .filter(|c| c.as_ref().map_or(true, |c| c.len() >= 2))
            .collect::<Result<_>>()?;
        Self::new(curves)
    }

    /// Same points with each value shifted by Gaussian noise of its
    /// standard error.
    pub fn perturbed(&self, rng: &mut ChaCha20Rng) -> Self {
        let mut out = self.clone();
        for c in &mut out.curves {
            for (v, &s) in c.value.iter_mut().zip(&c.stderr) {
                let z: f64 = StandardNormal.sample(rng);
                *v += s * z;
            }
        }
        out
    }
}

/// Where the curves of two sizes intersect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub disorder: f64,
    pub sizes: (usize, usize),
    /// `|Σ_left z − Σ_right z|` over the knots on either side, where
    /// `z = (R_a − R_b) / σ` is the error-weighted difference.
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingAnalysis {
    /// Every sign change of every pair's difference curve.
    pub crossings: Vec<Crossing>,
    /// One crossing per pair: the one with the largest `separation`, i.e.
    /// the sign change that best splits the difference curve into a
    /// positive and a negative side. Noise-induced double crossings score low.
    pub pair_estimates: Vec<Crossing>,
    /// Pairs whose curves coincide on the shared window.
    pub degenerate_pairs: Vec<(usize, usize)>,
    /// Pairs that never cross on the shared window.
    pub uncrossed_pairs: Vec<(usize, usize)>,
    /// Mean of `pair_estimates`.
    pub mean: f64,
    /// Sample standard deviation of `pair_estimates`; zero for one pair.
    pub spread: f64,
}

enum PairCrossings {
    Degenerate,
    Found(Vec<Crossing>),
}

fn pair_crossings(a: &SizeCurve, b: &SizeCurve) -> PairCrossings {
    let lo = a.disorder[0].max(b.disorder[0]);
    let hi = a.disorder[a.len() - 1].min(b.disorder[b.len() - 1]);
    let mut knots: Vec<f64> = a
        .disorder
        .iter()
        .chain(&b.disorder)
        .copied()
        .filter(|&h| h >= lo && h <= hi)
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let diff: Vec<f64> = knots
        .iter()
        .map(|&h| a.interpolate(h).expect("in range") - b.interpolate(h).expect("in range"))
        .collect();
    let z: Vec<f64> = knots
        .iter()
        .zip(&diff)
        .map(|(&h, d)| {
            let sa = a.interpolate_column(&a.stderr, h).expect("in range");
            let sb = b.interpolate_column(&b.stderr, h).expect("in range");
            d / (sa * sa + sb * sb).max(VARIANCE_FLOOR).sqrt()
        })
        .collect();
    let separation = |h: f64| {
        let (mut left, mut right) = (0.0, 0.0);
        for (&k, &zk) in knots.iter().zip(&z) {
            if k < h {
                left += zk;
            } else if k > h {
                right += zk;
            }
        }
        (left - right).abs()
    };
    let scale = a
        .value
        .iter()
        .chain(&b.value)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    if diff.iter().all(|d| d.abs() <= tol) {
        return PairCrossings::Degenerate;
    }
    let sizes = (a.size, b.size);
    let mut found = Vec::new();
    for i in 1..knots.len() {
        let (d0, d1) = (diff[i - 1], diff[i]);
        let (h0, h1) = (knots[i - 1], knots[i]);
        if d0.abs() <= tol && d1.abs() <= tol {
            continue;
        }
        if d1.abs() <= tol {
            // touches zero at a knot; a crossing if the sign changes across it
            let next = diff[i + 1..].iter().find(|d| d.abs() > tol);
            if next.is_some_and(|n| n.signum() != d0.signum()) {
                found.push(Crossing {
                    disorder: h1,
                    sizes,
                    separation: separation(h1),
                });
            }
        } else if d0.abs() > tol && d0.signum() != d1.signum() {
            let h = h0 + (h1 - h0) * d0 / (d0 - d1);
            found.push(Crossing {
                disorder: h,
                sizes,
                separation: separation(h),
            });
        }
    }
    PairCrossings::Found(found)
}

/// Pairwise crossings of linearly interpolated curves and their pooled
/// estimate of `h_c`.
pub fn crossing_points(dataset: &ScalingDataset) -> Result<CrossingAnalysis> {
    let curves = dataset.curves();
    let mut crossings = Vec::new();
    let mut pair_estimates = Vec::new();
    let mut degenerate_pairs = Vec::new();
    let mut uncrossed_pairs = Vec::new();
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let pair = (curves[i].size, curves[j].size);
            match pair_crossings(&curves[i], &curves[j]) {
                PairCrossings::Degenerate => degenerate_pairs.push(pair),
                PairCrossings::Found(found) if found.is_empty() => uncrossed_pairs.push(pair),
                PairCrossings::Found(found) => {
                    let best = *found
                        .iter()
                        .reduce(|best, c| if c.separation > best.separation { c } else { best })
                        .expect("non-empty");
                    pair_estimates.push(best);
                    crossings.extend(found);
                }
            }
        }
    }
    if pair_estimates.is_empty() {
        return Err(analysis("no pair of sizes crosses inside the shared disorder window"));
    }
    let n = pair_estimates.len() as f64;
    let mean = pair_estimates.iter().map(|c| c.disorder).sum::<f64>() / n;
    let spread = if pair_estimates.len() > 1 {
        (pair_estimates.iter().map(|c| (c.disorder - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(CrossingAnalysis {
        crossings,
        pair_estimates,
        degenerate_pairs,
        uncrossed_pairs,
        mean,
        spread,
    })
}

/// One data point in collapse coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapsedPoint {
    pub size: usize,
    pub disorder: f64,
    pub x: f64,
    pub y: f64,
    pub dy: f64,
}

/// `x = L^{1/ν}(h − h_c)`, `y = L^{−β/ν} R̄_SS`, `dy = L^{−β/ν} σ`, grouped by
/// curve.
pub fn collapse_coordinates(dataset: &ScalingDataset, h_c: f64, nu: f64, beta: f64) -> Vec<Vec<CollapsedPoint>> {
    dataset
        .curves()
        .iter()
        .map(|c| {
            let l = c.size as f64;
            let sx = l.powf(1.0 / nu);
            let sy = l.powf(-beta / nu);
            (0..c.len())
                .map(|i| CollapsedPoint {
                    size: c.size,
                    disorder: c.disorder[i],
                    x: sx * (c.disorder[i] - h_c),
                    y: sy * c.value[i],
                    dy: sy * c.stderr[i],
                })
                .collect()
        })
        .collect()
}

/// Reduced χ² of the collapse at `(h_c, ν, β)`.
///
/// For every point, the master curve is estimated by a weighted linear fit
/// through the `neighbors` closest points (in `x`) taken from other sizes
/// whose `x` range covers it. The point contributes
/// `(y − Y)² / (dy² + dY²)`, with `Y` and `dY` the fit value and its
/// standard error. Points without at least two distinct neighbours are
/// skipped.
pub fn collapse_quality(dataset: &ScalingDataset, h_c: f64, nu: f64, beta: f64, neighbors: usize) -> Result<f64> {
    if !(nu > 0.0) || !h_c.is_finite() || !beta.is_finite() {
        return Err(analysis(format!(
            "invalid collapse parameters h_c = {h_c}, ν = {nu}, β = {beta}"
        )));
    }
    if neighbors < 2 {
        return Err(analysis("a local linear fit needs at least 2 neighbours"));
    }
    let curves = collapse_coordinates(dataset, h_c, nu, beta);
    let ranges: Vec<(f64, f64)> = curves.iter().map(|c| (c[0].x, c[c.len() - 1].x)).collect();
    let mut total = 0.0;
    let mut used = 0usize;
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (ci, curve) in curves.iter().enumerate() {
        for p in curve {
            candidates.clear();
            for (cj, other) in curves.iter().enumerate() {
                if cj == ci || p.x < ranges[cj].0 || p.x > ranges[cj].1 {
                    continue;
                }
                candidates.extend(other.iter().enumerate().map(|(k, q)| ((q.x - p.x).abs(), cj, k)));
            }
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
            let chosen = &candidates[..candidates.len().min(neighbors)];
            let (mut k, mut kx, mut ky, mut kxx, mut kxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for &(_, cj, idx) in chosen {
                let q = &curves[cj][idx];
                let w = 1.0 / (q.dy * q.dy).max(VARIANCE_FLOOR);
                k += w;
                kx += w * q.x;
                ky += w * q.y;
                kxx += w * q.x * q.x;
                kxy += w * q.x * q.y;
            }
            let det = k * kxx - kx * kx;
            if chosen.len() < 2 || !(det > 1e-12 * k * kxx.max(f64::MIN_POSITIVE)) {
                continue;
            }
            let fit = ((kxx * ky - kx * kxy) + p.x * (k * kxy - kx * ky)) / det;
            let fit_var = ((kxx - 2.0 * p.x * kx + p.x * p.x * k) / det).max(0.0);
            let var = (p.dy * p.dy + fit_var).max(VARIANCE_FLOOR);
            total += (p.y - fit).powi(2) / var;
            used += 1;
        }
    }
    if used < 2 {
        return Err(analysis(format!(
            "only {used} points have neighbours from other sizes; the collapse is undefined"
        )));
    }
    Ok(total / used as f64)
}

/// Inputs of [`fit_collapse`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub initial_hc: f64,
    pub hc_bounds: [f64; 2],
    pub nu_bounds: [f64; 2],
    pub beta_bounds: [f64; 2],
    pub beta_mode: BetaMode,
    pub neighbors: usize,
    pub multistarts: usize,
    pub bootstrap: usize,
    pub seed: u64,
    pub max_evaluations: usize,
}

impl FitOptions {
    pub fn from_config(analysis: &AnalysisConfig, initial_hc: f64) -> Self {
        Self {
            initial_hc,
            hc_bounds: analysis.hc_bounds,
            nu_bounds: analysis.nu_bounds,
            beta_bounds: analysis.beta_bounds,
            beta_mode: analysis.beta_mode,
            neighbors: analysis.neighbors,
            multistarts: analysis.multistarts,
            bootstrap: analysis.bootstrap,
            seed: analysis.seed,
            max_evaluations: 4000,
        }
    }

    fn dims(&self) -> usize {
        match self.beta_mode {
            BetaMode::Free => 3,
            BetaMode::Pinned => 2,
        }
    }

    fn lower(&self) -> Vec<f64> {
        let mut v = vec![self.hc_bounds[0], self.nu_bounds[0], self.beta_bounds[0]];
        v.truncate(self.dims());
        v
    }

    fn upper(&self) -> Vec<f64> {
        let mut v = vec![self.hc_bounds[1], self.nu_bounds[1], self.beta_bounds[1]];
        v.truncate(self.dims());
        v
    }

    fn simplex_options(&self) -> SimplexOptions {
        let mut step = vec![0.3, 0.3, 0.05];
        step.truncate(self.dims());
        SimplexOptions {
            max_evaluations: self.max_evaluations,
            ..SimplexOptions::new(step)
        }
    }

    /// Start points around the crossing estimate.
    fn starts(&self) -> Vec<Vec<f64>> {
        const OFFSETS: [(f64, f64, f64); 8] = [
            (0.0, 1.0, 0.0),
            (-0.5, 1.0, 0.0),
            (0.5, 1.0, 0.0),
            (0.0, 0.6, 0.0),
            (0.0, 2.0, 0.0),
            (-0.25, 1.5, 0.1),
            (0.25, 0.8, -0.1),
            (0.0, 3.0, 0.0),
        ];
        (0..self.multistarts.max(1))
            .map(|i| {
                let (dh, nu, beta) = OFFSETS[i % OFFSETS.len()];
                let mut v = vec![self.initial_hc + dh, nu, beta];
                v.truncate(self.dims());
                v
            })
            .collect()
    }
}

/// Fitted collapse parameters with bootstrap standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseFit {
    pub beta_mode: BetaMode,
    pub h_c: f64,
    pub nu: f64,
    pub beta: f64,
    pub quality: f64,
    pub h_c_stderr: f64,
    pub nu_stderr: f64,
    /// Zero when β is pinned.
    pub beta_stderr: f64,
    pub h_c_at_bound: bool,
    pub nu_at_bound: bool,
    pub beta_at_bound: bool,
    pub evaluations: usize,
    /// Resamples that produced a converged fit.
    pub bootstrap_samples: usize,
    pub collapsed: Vec<CollapsedPoint>,
}

fn at_bound(v: f64, b: [f64; 2]) -> bool {
    let tol = 1e-6 * (b[1] - b[0]);
    v <= b[0] + tol || v >= b[1] - tol
}

fn unpack(x: &[f64]) -> (f64, f64, f64) {
    (x[0], x[1], x.get(2).copied().unwrap_or(0.0))
}

struct PointFit {
    x: Vec<f64>,
    value: f64,
    evaluations: usize,
}

fn best_of(dataset: &ScalingDataset, options: &FitOptions, starts: &[Vec<f64>]) -> Result<PointFit> {
    let lower = options.lower();
    let upper = options.upper();
    let simplex = options.simplex_options();
    let runs: Vec<_> = starts
        .par_iter()
        .map(|start| {
            minimize(
                |x| {
                    let (h_c, nu, beta) = unpack(x);
                    collapse_quality(dataset, h_c, nu, beta, options.neighbors).unwrap_or(f64::INFINITY)
                },
                start,
                &lower,
                &upper,
                &simplex,
            )
        })
        .collect();
    let evaluations = runs.iter().map(|m| m.evaluations).sum();
    match runs
        .iter()
        .filter(|m| m.converged && m.value.is_finite())
        .min_by(|a, b| a.value.total_cmp(&b.value))
    {
        Some(m) => Ok(PointFit {
            x: m.x.clone(),
            value: m.value,
            evaluations,
        }),
        None => {
            let best = runs
                .iter()
                .min_by(|a, b| a.value.total_cmp(&b.value))
                .expect("at least one start");
            Err(Error::NotConverged {
                evaluations,
                best: best.x.clone(),
                best_quality: best.value,
            })
        }
    }
}

fn stddev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return f64::NAN;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Simplex search for the best collapse from several starts, then a
/// parametric bootstrap for the error bars. Deterministic for a fixed
/// `options.seed`.
pub fn fit_collapse(dataset: &ScalingDataset, options: &FitOptions) -> Result<CollapseFit> {
    if options.neighbors < 2 {
        return Err(analysis("a local linear fit needs at least 2 neighbours"));
    }
    if !(options.nu_bounds[0] > 0.0) {
        return Err(analysis("the ν bounds must be positive"));
    }
    let best = best_of(dataset, options, &options.starts())?;
    let (h_c, nu, beta) = unpack(&best.x);

    let resamples: Vec<Option<(f64, f64, f64)>> = (0..options.bootstrap)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(options.seed);
            rng.set_stream(b as u64);
            let resampled = dataset.perturbed(&mut rng);
            best_of(&resampled, options, std::slice::from_ref(&best.x))
                .ok()
                .map(|fit| unpack(&fit.x))
        })
        .collect();
    let ok: Vec<(f64, f64, f64)> = resamples.into_iter().flatten().collect();
    let column = |f: fn(&(f64, f64, f64)) -> f64| ok.iter().map(f).collect::<Vec<_>>();

    Ok(CollapseFit {
        beta_mode: options.beta_mode,
        h_c,
        nu,
        beta,
        quality: best.value,
        h_c_stderr: stddev(&column(|p| p.0)),
        nu_stderr: stddev(&column(|p| p.1)),
        beta_stderr: match options.beta_mode {
            BetaMode::Free => stddev(&column(|p| p.2)),
            BetaMode::Pinned => 0.0,
        },
        h_c_at_bound: at_bound(h_c, options.hc_bounds),
        nu_at_bound: at_bound(nu, options.nu_bounds),
        beta_at_bound: options.beta_mode == BetaMode::Free && at_bound(beta, options.beta_bounds),
        evaluations: best.evaluations,
        bootstrap_samples: ok.len(),
        collapsed: collapse_coordinates(dataset, h_c, nu, beta)
            .into_iter()
            .flatten()
            .collect(),
    })
}

/// Crossing analysis plus collapse fits with β free and β pinned to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub environment: Option<EnvironmentKind>,
    pub ratio: Option<Ratio>,
    pub sizes: Vec<usize>,
    pub crossings: CrossingAnalysis,
    /// Disorder range used for the collapse.
    pub window: [f64; 2],
    /// Which of the two fits the caller asked for.
    pub selected: BetaMode,
    pub free: CollapseFit,
    pub pinned: CollapseFit,
}

impl FitReport {
    pub fn selected_fit(&self) -> &CollapseFit {
        match self.selected {
            BetaMode::Free => &self.free,
            BetaMode::Pinned => &self.pinned,
        }
    }
}

/// Crossings on the full dataset, then both collapse fits on the window
/// `h_cross ± window_half_width`.
pub fn analyze(dataset: &ScalingDataset, config: &AnalysisConfig) -> Result<FitReport> {
    let crossings = crossing_points(dataset)?;
    let center = crossings.mean;
    let windowed = dataset.restrict(center, config.window_half_width)?;
    let initial = center.clamp(config.hc_bounds[0], config.hc_bounds[1]);
    let mut options = FitOptions::from_config(config, initial);
    options.beta_mode = BetaMode::Free;
    let free = fit_collapse(&windowed, &options)?;
    options.beta_mode = BetaMode::Pinned;
    let pinned = fit_collapse(&windowed, &options)?;
    Ok(FitReport {
        schema_version: crate::io::SCHEMA_VERSION,
        environment: None,
        ratio: None,
        sizes: windowed.sizes(),
        crossings,
        window: [center - config.window_half_width, center + config.window_half_width],
        selected: config.beta_mode,
        free,
        pinned,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(size: usize, slope: f64, offset: f64) -> SizeCurve {
        SizeCurve::new(
            size,
            (0..7).map(|i| {
                let h = 1.0 + i as f64;
                (h, slope * h + offset, 0.01)
            }),
        )
        .unwrap()
    }

    #[test]
    fn noisy_double_crossing_loses_to_the_clear_one() {
        // crosses cleanly at 2.5, then wiggles through zero between 5 and 7
        let a = SizeCurve::new(
            6,
            [
                (1.0, 0.2),
                (2.0, 0.3),
                (3.0, 0.5),
                (4.0, 0.6),
                (5.0, 0.7),
                (6.0, 0.75),
                (7.0, 0.8),
            ]
            .map(|(h, v)| (h, v, 0.01)),
        )
        .unwrap();
        let b = SizeCurve::new(
            8,
            [
                (1.0, 0.1),
                (2.0, 0.2),
                (3.0, 0.6),
                (4.0, 0.7),
                (5.0, 0.71),
                (6.0, 0.74),
                (7.0, 0.81),
            ]
            .map(|(h, v)| (h, v, 0.01)),
        )
        .unwrap();
        let ds = ScalingDataset::new(vec![a, b]).unwrap();
        let c = crossing_points(&ds).unwrap();
        assert_eq!(c.crossings.len(), 3);
        assert!((c.mean - 2.5).abs() < 1e-12, "{c:?}");
    }

    #[test]
    fn two_lines_cross_at_three() {
        let data = ScalingDataset::new(vec![line(6, 1.0, -3.0), line(9, 2.0, -6.0)]).unwrap();
        let c = crossing_points(&data).unwrap();
        assert_eq!(c.pair_estimates.len(), 1);
        assert!((c.mean - 3.0).abs() < 1e-12);
        assert_eq!(c.spread, 0.0);
        assert_eq!(c.pair_estimates[0].sizes, (6, 9));
    }

    #[test]
    fn crossing_between_knots_is_interpolated() {
        let data = ScalingDataset::new(vec![line(6, 1.0, -3.25), line(9, 2.0, -6.5)]).unwrap();
        assert!((crossing_points(&data).unwrap().mean - 3.25).abs() < 1e-12);
    }

    #[test]
    fn identical_curves_are_degenerate() {
        let data = ScalingDataset::new(vec![line(6, 1.0, 0.0), line(9, 1.0, 0.0)]).unwrap();
        match crossing_points(&data) {
            Err(Error::Analysis(_)) => {}
            other => panic!("expected analysis error, got {other:?}"),
        }
        let data = ScalingDataset::new(vec![line(6, 1.0, 0.0), line(9, 1.0, 0.0), line(12, 2.0, -3.0)]).unwrap();
        let c = crossing_points(&data).unwrap();
        assert_eq!(c.degenerate_pairs, vec![(6, 9)]);
        assert_eq!(c.pair_estimates.len(), 2);
    }

    #[test]
    fn parallel_curves_have_no_crossing() {
        let data = ScalingDataset::new(vec![line(6, 1.0, 0.0), line(9, 1.0, 1.0)]).unwrap();
        assert!(crossing_points(&data).is_err());
    }

    #[test]
    fn dataset_invariants() {
        assert!(ScalingDataset::new(vec![line(6, 1.0, 0.0)]).is_err());
        assert!(ScalingDataset::new(vec![line(6, 1.0, 0.0), line(6, 2.0, 0.0)]).is_err());
        let far = SizeCurve::new(9, [(10.0, 0.0, 0.1), (11.0, 1.0, 0.1)]).unwrap();
        assert!(ScalingDataset::new(vec![line(6, 1.0, 0.0), far]).is_err());
        assert!(SizeCurve::new(6, [(1.0, 0.0, 0.1), (1.0, 0.5, 0.1)]).is_err());
        assert!(SizeCurve::new(6, [(1.0, f64::NAN, 0.1)]).is_err());
    }

    #[test]
    fn single_sample_stderr_becomes_zero() {
        let c = SizeCurve::new(6, [(1.0, 0.5, f64::NAN)]).unwrap();
        assert_eq!(c.stderr, vec![0.0]);
    }

    #[test]
    fn restrict_keeps_window() {
        let data = ScalingDataset::new(vec![line(6, 1.0, -3.0), line(9, 2.0, -6.0)]).unwrap();
        let w = data.restrict(3.0, 1.0).unwrap();
        assert_eq!(w.curves()[0].disorder, vec![2.0, 3.0, 4.0]);
        assert!(data.restrict(100.0, 1.0).is_err());
    }

    #[test]
    fn exact_linear_collapse_has_zero_quality() {
        let hs: Vec<f64> = (0..9).map(|i| 2.0 + 0.25 * i as f64).collect();
        let data = ScalingDataset::from_ansatz(&[6, 9, 12], &hs, (3.0, 1.2, 0.0), |x| 0.5 + 0.1 * x, 0.01).unwrap();
        let q = collapse_quality(&data, 3.0, 1.2, 0.0, 4).unwrap();
        assert!(q <= 1e-20, "{q}");
        assert!(collapse_quality(&data, 3.0, 3.6, 0.0, 4).unwrap() > 1.0);
    }

    #[test]
    fn quality_rejects_bad_parameters() {
        let data = ScalingDataset::new(vec![line(6, 1.0, -3.0), line(9, 2.0, -6.0)]).unwrap();
        assert!(collapse_quality(&data, 3.0, 0.0, 0.0, 4).is_err());
        assert!(collapse_quality(&data, 3.0, 1.0, 0.0, 1).is_err());
        // curves pushed apart in x leave nothing to compare
        assert!(collapse_quality(&data, 20.0, 0.05, 0.0, 4).is_err());
    }

    #[test]
    fn at_bound_flags() {
        assert!(at_bound(1.0, [1.0, 6.0]));
        assert!(at_bound(6.0, [1.0, 6.0]));
        assert!(!at_bound(3.0, [1.0, 6.0]));
    }
}
