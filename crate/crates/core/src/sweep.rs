//! Heterogeneous pathway ensembles and the original-vs-rescaled comparison pipeline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{
    level_crossing_time, reference_time, shape_residual, velocity_series, ProfileFrame, ShapeResidualSeries,
    VelocitySeries,
};
use crate::model::{classify, EdgeParams, InitialState, PathwaySpec, Region};
use crate::ode::{integrate, IntegratorConfig, Trajectory};
use crate::rescale::{rescale, RescaledCoordinates, SpeedOracle};
use crate::scalar::Scalar;

/// Rescaled position at which the post-transient window opens.
pub const WINDOW_START_S: f64 = 0.15;
/// Fraction of excluded realizations above which a sweep row is rejected.
pub const MAX_EXCLUDED_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientKind {
    /// `alpha_i` linear from `lo` to `hi`.
    AlphaLinear,
    /// `ln(B_i - 1)` linear from `ln(lo - 1)` to `ln(hi - 1)`.
    BLog,
    /// `phi_i` linear from `lo` to `hi`.
    PhiLinear,
}

/// Monotone parameter gradient along an otherwise uniform pathway.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSpec<T> {
    pub kind: GradientKind,
    pub lo: T,
    pub hi: T,
    /// Values of the parameters that do not vary.
    pub base: EdgeParams<T>,
    pub n: usize,
}

fn ramp<T: Scalar>(lo: T, hi: T, i: usize, n: usize) -> T {
    if n == 1 || i == n - 1 {
        return if n == 1 { lo } else { hi };
    }
    lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)
}

/// Pathway carrying `g`, with an activating input into a fully inactive chain.
pub fn build_gradient<T: Scalar>(g: &GradientSpec<T>) -> Result<PathwaySpec<T>> {
    if g.n < 2 {
        return Err(Error::InvalidParams(format!("gradient needs n >= 2, got {}", g.n)));
    }
    let base = g.base;
    let edges = (0..g.n)
        .map(|i| match g.kind {
            GradientKind::AlphaLinear => {
                if !(g.lo > T::zero() && g.hi > T::zero()) {
                    return Err(Error::InvalidParams("alpha gradient endpoints must be positive".into()));
                }
                base.with_alpha(ramp(g.lo, g.hi, i, g.n))
            }
            GradientKind::BLog => {
                if !(g.lo > T::one() && g.hi > T::one()) {
                    return Err(Error::InvalidParams("B gradient endpoints must exceed 1".into()));
                }
                let lb = ramp((g.lo - T::one()).ln(), (g.hi - T::one()).ln(), i, g.n);
                let b = if i == 0 {
                    g.lo
                } else if i == g.n - 1 {
                    g.hi
                } else {
                    T::one() + lb.exp()
                };
                EdgeParams::from_saturation(base.alpha(), b, base.phi())
            }
            GradientKind::PhiLinear => {
                let p = base.with_phi(ramp(g.lo, g.hi, i, g.n))?;
                let eq = classify(&p);
                if eq.region != Region::Region2 || eq.degenerate {
                    return Err(Error::InvalidParams(format!(
                        "phi = {} at edge {} leaves the bistable window (|phi| < {})",
                        p.phi(),
                        i + 1,
                        eq.phi_c
                    )));
                }
                Ok(p)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    PathwaySpec::new(edges, T::one(), InitialState::Uniform(-T::one()))
}

/// Lognormal ensemble of pathways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StochasticEnsembleSpec {
    pub alpha0: f64,
    pub beta0: f64,
    pub sigma: f64,
    pub phi: f64,
    pub n: usize,
    pub realizations: usize,
    pub seed: u64,
}

impl Default for StochasticEnsembleSpec {
    fn default() -> Self {
        Self { alpha0: 1.0, beta0: 5.0, sigma: 0.4, phi: 0.0, n: 200, realizations: 200, seed: 0 }
    }
}

impl StochasticEnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0) || !(self.beta0 > 1.0) || !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParams(format!(
                "need alpha0 > 0, beta0 > 1, sigma >= 0 (got {}, {}, {})",
                self.alpha0, self.beta0, self.sigma
            )));
        }
        if !(-1.0..=1.0).contains(&self.phi) || self.n < 2 || self.realizations == 0 {
            return Err(Error::InvalidParams("need |phi| <= 1, n >= 2, realizations >= 1".into()));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d1_049b_b133_111b);
    z ^ (z >> 31)
}

/// Stream seed for realization `k`, keyed by the sigma value so grids can be extended
/// without perturbing existing realizations.
pub fn realization_seed(seed: u64, sigma: f64, k: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ sigma.to_bits()) ^ k as u64)
}

/// Realization `k` of the ensemble: `alpha_i = alpha0 exp(sigma z_i)`,
/// `beta_i = 1 + (beta0 - 1) exp(sigma z'_i)`, activating input into an inactive chain.
pub fn sample_realization<T: Scalar>(s: &StochasticEnsembleSpec, k: usize) -> Result<PathwaySpec<T>> {
    s.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(realization_seed(s.seed, s.sigma, k));
    let z: Vec<f64> = (0..2 * s.n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let edges = (0..s.n)
        .map(|i| {
            let alpha = s.alpha0 * (s.sigma * z[i]).exp();
            let beta = 1.0 + (s.beta0 - 1.0) * (s.sigma * z[s.n + i]).exp();
            EdgeParams::new(T::lit(alpha), T::lit(beta), T::lit(s.phi))
        })
        .collect::<Result<Vec<_>>>()?;
    PathwaySpec::new(edges, T::one(), InitialState::Uniform(-T::one()))
}

fn trapezoid<T: Scalar>(t: &[T], f: impl Fn(usize) -> T) -> T {
    let mut acc = T::zero();
    for j in 1..t.len() {
        acc += (t[j] - t[j - 1]) * (f(j) + f(j - 1)) / T::lit(2.0);
    }
    acc
}

/// Integrated squared deviation of a velocity series from its time average (trapezoidal).
pub fn vise<T: Scalar>(series: &VelocitySeries<T>) -> Result<T> {
    let t = &series.times[series.valid_from..];
    let c = &series.values[series.valid_from..];
    if t.len() < 3 {
        return Err(Error::TooFewSamples { found: t.len() });
    }
    let span = t[t.len() - 1] - t[0];
    let mean = trapezoid(t, |j| c[j]) / span;
    Ok(trapezoid(t, |j| (c[j] - mean) * (c[j] - mean)))
}

/// Integrated squared shape residual (trapezoidal).
pub fn rise<T: Scalar>(series: &ShapeResidualSeries<T>) -> Result<T> {
    let t = &series.times;
    if t.len() < 3 {
        return Err(Error::TooFewSamples { found: t.len() });
    }
    Ok(trapezoid(t, |j| series.values[j] * series.values[j]))
}

impl<T: Scalar> VelocitySeries<T> {
    /// Samples with `t0 <= t_j <= t1`.
    pub fn windowed(&self, t0: T, t1: T) -> Self {
        let keep: Vec<usize> = (0..self.times.len()).filter(|&j| self.times[j] >= t0 && self.times[j] <= t1).collect();
        Self {
            frame: self.frame,
            times: keep.iter().map(|&j| self.times[j]).collect(),
            values: keep.iter().map(|&j| self.values[j]).collect(),
            degenerate: keep.iter().map(|&j| self.degenerate[j]).collect(),
            valid_from: 0,
        }
    }
}

impl<T: Scalar> ShapeResidualSeries<T> {
    pub fn windowed(&self, t0: T, t1: T) -> Self {
        let keep: Vec<usize> = (0..self.times.len()).filter(|&j| self.times[j] >= t0 && self.times[j] <= t1).collect();
        Self {
            frame: self.frame,
            times: keep.iter().map(|&j| self.times[j]).collect(),
            values: keep.iter().map(|&j| self.values[j]).collect(),
            reference_time: self.reference_time,
            reference_index: keep.iter().position(|&j| j == self.reference_index).unwrap_or(usize::MAX),
        }
    }
}

/// Metrics of one frame over the full trajectory, plus window integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics<T> {
    /// Original frame: `c_j / N`; rescaled frame: `c~_j`.
    pub velocity: VelocitySeries<T>,
    pub residual: ShapeResidualSeries<T>,
    pub vise: T,
    pub rise: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison<T> {
    pub original: FrameMetrics<T>,
    pub rescaled: FrameMetrics<T>,
    pub coords: RescaledCoordinates<T>,
    /// Post-transient window `[t_start, t_end]`.
    pub window: (T, T),
    pub reference_time: T,
    pub trajectory: Trajectory<T>,
}

fn stalled_range<T: Scalar>(traj: &Trajectory<T>) -> String {
    let last = traj.last();
    let n = last.x.len();
    let init = traj.samples[0].x[n - 1];
    let front = last.x.iter().rposition(|&x| (x > T::zero()) != (init > T::zero())).map_or(0, |i| i + 1);
    format!("front stalled between node {front} and node {n} by t = {}", last.t)
}

fn frame_metrics<T: Scalar>(
    traj: &Trajectory<T>,
    frame: &ProfileFrame<T>,
    scale: T,
    t_ref: T,
    window: (T, T),
) -> Result<FrameMetrics<T>> {
    let mut velocity = velocity_series(traj, frame)?.scaled(scale);
    let residual = shape_residual(traj, frame, t_ref)?;
    let vw = velocity.windowed(window.0, window.1);
    let rw = residual.windowed(window.0, window.1);
    let (vise, rise) = (vise(&vw)?, rise(&rw)?);
    velocity.valid_from = velocity.times.partition_point(|&t| t < window.0);
    Ok(FrameMetrics { velocity, residual, vise, rise })
}

/// Integrates `spec` once and evaluates velocity and shape metrics in both frames.
pub fn run_comparison<T: Scalar>(
    spec: &PathwaySpec<T>,
    oracle: &SpeedOracle<T>,
    config: &IntegratorConfig<T>,
) -> Result<Comparison<T>> {
    match spec.initial() {
        InitialState::Uniform(v) if v.abs() == T::one() && spec.boundary_input() == -*v => {}
        _ => {
            return Err(Error::InvalidParams(
                "comparison requires a uniform initial state at +-1 and the opposite boundary input".into(),
            ))
        }
    }
    let coords = rescale(spec, oracle)?;
    let traj = integrate(spec, &config.with_stop_on_arrival(true))?;
    let arrival = traj.arrival_time.ok_or_else(|| Error::NoPropagation(stalled_range(&traj)))?;
    let n = spec.len();
    let original = ProfileFrame::original(n);
    let rescaled = ProfileFrame::rescaled(&coords);
    let t_start = level_crossing_time(&traj, &rescaled, T::lit(WINDOW_START_S), T::zero())?;
    let t_ref = reference_time(&traj, &rescaled)?;
    let window = (t_start, arrival);
    Ok(Comparison {
        original: frame_metrics(&traj, &original, T::one() / T::from_usize_lossy(n), t_ref, window)?,
        rescaled: frame_metrics(&traj, &rescaled, T::one(), t_ref, window)?,
        coords,
        window,
        reference_time: t_ref,
        trajectory: traj,
    })
}

/// Inclusive-method quartiles (linear interpolation between order statistics).
pub fn quartiles(values: &[f64]) -> Quartiles {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        if v.is_empty() {
            return f64::NAN;
        }
        let h = p * (v.len() - 1) as f64;
        let (lo, frac) = (h.floor() as usize, h - h.floor());
        if lo + 1 < v.len() {
            v[lo] + frac * (v[lo + 1] - v[lo])
        } else {
            v[lo]
        }
    };
    Quartiles { median: q(0.5), q1: q(0.25), q3: q(0.75) }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrema {
    pub mean_min: f64,
    pub mean_max: f64,
}

/// Metrics of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub sigma: f64,
    pub index: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    /// `None` when the realization was excluded; the reason is kept.
    pub metrics: Option<[f64; 4]>,
    pub excluded_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub vise_original: Quartiles,
    pub vise_rescaled: Quartiles,
    pub rise_original: Quartiles,
    pub rise_rescaled: Quartiles,
    pub alpha_extrema: Extrema,
    pub beta_extrema: Extrema,
    pub excluded: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub sigma_grid: Vec<f64>,
    pub rows: Vec<SweepRow>,
    pub realizations: Vec<RealizationRecord>,
}

pub fn default_sigma_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

fn extrema(spec: &PathwaySpec<f64>) -> (f64, f64, f64, f64) {
    let mut r = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for e in spec.edges() {
        r = (r.0.min(e.alpha()), r.1.max(e.alpha()), r.2.min(e.beta()), r.3.max(e.beta()));
    }
    r
}

/// Widest `B` range over every realization of every sigma level.
pub fn sampled_b_range(s: &StochasticEnsembleSpec, sigma_grid: &[f64]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &sigma in sigma_grid {
        let level = StochasticEnsembleSpec { sigma, ..*s };
        for k in 0..s.realizations {
            for e in sample_realization::<f64>(&level, k)?.edges() {
                lo = lo.min(e.saturation());
                hi = hi.max(e.saturation());
            }
        }
    }
    Ok((lo, hi))
}

/// Runs `realizations` comparisons per sigma level and aggregates VISE/RISE statistics.
///
/// Table-mode oracles are widened first to cover every sampled `B` with a 10 % margin.
pub fn sweep(
    s: &StochasticEnsembleSpec,
    sigma_grid: &[f64],
    oracle: &SpeedOracle<f64>,
    config: &IntegratorConfig<f64>,
) -> Result<SweepSummary> {
    s.validate()?;
    if sigma_grid.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::InvalidParams("sigma grid must lie within [0, 1]".into()));
    }
    let (b_lo, b_hi) = sampled_b_range(s, sigma_grid)?;
    oracle.ensure_coverage(b_lo, b_hi, 0.1)?;

    let mut rows = Vec::with_capacity(sigma_grid.len());
    let mut records = Vec::new();
    for &sigma in sigma_grid {
        let level = StochasticEnsembleSpec { sigma, ..*s };
        let level_records: Vec<RealizationRecord> = (0..s.realizations)
            .into_par_iter()
            .map(|k| {
                let spec = sample_realization::<f64>(&level, k)?;
                let (alpha_min, alpha_max, beta_min, beta_max) = extrema(&spec);
                let mut rec = RealizationRecord {
                    sigma,
                    index: k,
                    alpha_min,
                    alpha_max,
                    beta_min,
                    beta_max,
                    metrics: None,
                    excluded_reason: None,
                };
                match run_comparison(&spec, oracle, config) {
                    Ok(c) => rec.metrics = Some([c.original.vise, c.rescaled.vise, c.original.rise, c.rescaled.rise]),
                    Err(e) if e.is_propagation_failure() => rec.excluded_reason = Some(e.to_string()),
                    Err(e) => return Err(e),
                }
                Ok(rec)
            })
            .collect::<Result<_>>()?;
        let included: Vec<[f64; 4]> = level_records.iter().filter_map(|r| r.metrics).collect();
        let excluded = level_records.len() - included.len();
        if excluded as f64 > MAX_EXCLUDED_FRACTION * level_records.len() as f64 {
            return Err(Error::ExcessiveExclusions { sigma, excluded, total: level_records.len() });
        }
        let col = |m: usize| quartiles(&included.iter().map(|v| v[m]).collect::<Vec<_>>());
        let count = level_records.len() as f64;
        let mean = |f: fn(&RealizationRecord) -> f64| level_records.iter().map(f).sum::<f64>() / count;
        rows.push(SweepRow {
            sigma,
            vise_original: col(0),
            vise_rescaled: col(1),
            rise_original: col(2),
            rise_rescaled: col(3),
            alpha_extrema: Extrema { mean_min: mean(|r| r.alpha_min), mean_max: mean(|r| r.alpha_max) },
            beta_extrema: Extrema { mean_min: mean(|r| r.beta_min), mean_max: mean(|r| r.beta_max) },
            excluded,
            total: level_records.len(),
        });
        records.extend(level_records);
    }
    Ok(SweepSummary { sigma_grid: sigma_grid.to_vec(), rows, realizations: records })
}
