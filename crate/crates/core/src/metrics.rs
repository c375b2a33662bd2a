//! Wave metrics measured on sampled trajectories: least-squares instantaneous
//! velocity, asymptotic speed, reference time and global shape residuals.
//!
//! Every metric works in a [`ProfileFrame`], i.e. a set of node positions. The
//! original frame places node `i` at `i`; the rescaled frame places it at `s_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{classify, CascadeState, InitialState, PathwaySpec, Region};
use crate::ode::{integrate, IntegratorConfig, Trajectory};
use crate::rescale::RescaledCoordinates;
use crate::scalar::Scalar;
use crate::search::grid_golden;

/// Grid resolution of the coarse scan preceding golden-section refinement.
pub const GRID_POINTS: usize = 128;
/// Relative tolerance of the refined minimiser.
pub const SEARCH_REL_TOL: f64 = 1e-6;
/// Objectives varying by less than this over the scan are treated as flat.
pub const FLAT_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Original,
    Rescaled,
}

/// Node positions, per-node residual weights and domain length of one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFrame<T> {
    pub kind: Frame,
    pub positions: Vec<T>,
    pub weights: Vec<T>,
    pub length: T,
}

impl<T: Scalar> ProfileFrame<T> {
    /// Node `i` at position `i`, weights `1/N`, domain `[0, N]`.
    pub fn original(n: usize) -> Self {
        let w = T::one() / T::from_usize_lossy(n);
        Self {
            kind: Frame::Original,
            positions: (1..=n).map(T::from_usize_lossy).collect(),
            weights: vec![w; n],
            length: T::from_usize_lossy(n),
        }
    }

    /// Node `i` at `s_i`, weights `ds_i`, domain `[0, 1]`.
    pub fn rescaled(coords: &RescaledCoordinates<T>) -> Self {
        Self {
            kind: Frame::Rescaled,
            positions: coords.s[1..].to_vec(),
            weights: coords.ds.clone(),
            length: coords.s[coords.s.len() - 1] - coords.s[0],
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Centre of the domain: `N/2` in the original frame, `0.5` in the rescaled one.
    pub fn midpoint(&self) -> T {
        self.length / T::lit(2.0)
    }
}

#[inline]
fn lerp<T: Scalar>(a: T, b: T, w: T) -> T {
    a * (T::one() - w) + b * w
}

/// Piecewise-linear interpolation of a nodal profile, clamped to the end values
/// outside `[positions[0], positions[N-1]]`.
pub fn interp_profile<T: Scalar>(x: &[T], positions: &[T], q: T) -> T {
    let n = positions.len();
    if q <= positions[0] {
        return x[0];
    }
    if q >= positions[n - 1] {
        return x[n - 1];
    }
    let k = positions.partition_point(|&p| p <= q);
    // positions[k - 1] <= q < positions[k]
    let (p0, p1) = (positions[k - 1], positions[k]);
    lerp(x[k - 1], x[k], (q - p0) / (p1 - p0))
}

/// `sum_i w_i (target_i - interp(source, positions, positions_i - shift))^2`.
///
/// The query points increase with `i`, so a single forward sweep locates every segment.
pub fn shifted_misfit<T: Scalar>(target: &[T], source: &[T], positions: &[T], shift: T, weights: Option<&[T]>) -> T {
    let n = positions.len();
    let (first, last) = (positions[0], positions[n - 1]);
    let mut k = 0usize;
    let mut acc = T::zero();
    for i in 0..n {
        let q = positions[i] - shift;
        let v = if q <= first {
            source[0]
        } else if q >= last {
            source[n - 1]
        } else {
            while positions[k + 1] <= q {
                k += 1;
            }
            lerp(source[k], source[k + 1], (q - positions[k]) / (positions[k + 1] - positions[k]))
        };
        let d = target[i] - v;
        acc += match weights {
            Some(w) => w[i] * d * d,
            None => d * d,
        };
    }
    acc
}

/// Least-squares velocity between two consecutive samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityEstimate<T> {
    pub c: T,
    /// The objective was flat in `c`; `c` is reported as zero.
    pub degenerate: bool,
}

/// Shift velocity `c >= 0` minimising the squared mismatch between `next` and `prev`
/// translated downstream by `c * dt`.
pub fn instantaneous_velocity<T: Scalar>(
    prev: &CascadeState<T>,
    next: &CascadeState<T>,
    frame: &ProfileFrame<T>,
    dt: T,
) -> Result<VelocityEstimate<T>> {
    let n = frame.len();
    if prev.x.len() != n || next.x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: prev.x.len().min(next.x.len()) });
    }
    if !(dt > T::zero()) || ((next.t - prev.t) - dt).abs() > T::lit(1e-9) * dt.max(T::one()) {
        return Err(Error::InvalidParams(format!(
            "samples at t = {} and t = {} are not separated by dt = {dt}",
            prev.t, next.t
        )));
    }
    Ok(velocity_unchecked(&prev.x, &next.x, frame, dt))
}

fn velocity_unchecked<T: Scalar>(prev: &[T], next: &[T], frame: &ProfileFrame<T>, dt: T) -> VelocityEstimate<T> {
    // search in units of the domain length so both frames follow identical arithmetic
    let len = frame.length;
    let m = grid_golden(
        |u| shifted_misfit(next, prev, &frame.positions, u * len, None),
        T::zero(),
        T::one(),
        GRID_POINTS,
        T::lit(SEARCH_REL_TOL),
        T::lit(FLAT_TOL),
    );
    if m.flat {
        VelocityEstimate { c: T::zero(), degenerate: true }
    } else {
        VelocityEstimate { c: m.x * len / dt, degenerate: false }
    }
}

/// Time series of instantaneous velocities; `values[j]` is measured between samples `j` and `j + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocitySeries<T> {
    pub frame: Frame,
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub degenerate: Vec<bool>,
    /// First index after transient filtering.
    pub valid_from: usize,
}

impl<T: Scalar> VelocitySeries<T> {
    /// Multiplies every velocity by `factor` (e.g. `1/N` for frame comparison).
    pub fn scaled(&self, factor: T) -> Self {
        Self { values: self.values.iter().map(|&v| v * factor).collect(), ..self.clone() }
    }
}

pub fn velocity_series<T: Scalar>(traj: &Trajectory<T>, frame: &ProfileFrame<T>) -> Result<VelocitySeries<T>> {
    let n = frame.len();
    if traj.spec.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: traj.spec.len() });
    }
    let dt = traj.sample_dt();
    let count = traj.len().saturating_sub(1);
    let mut times = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    let mut degenerate = Vec::with_capacity(count);
    for w in traj.samples.windows(2) {
        let est = velocity_unchecked(&w[0].x, &w[1].x, frame, dt);
        times.push(w[0].t);
        values.push(est.c);
        degenerate.push(est.degenerate);
    }
    Ok(VelocitySeries { frame: frame.kind, times, values, degenerate, valid_from: 0 })
}

/// Result of one asymptotic-speed measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedMeasurement<T> {
    /// Velocity in nodes per unit time at the sample nearest half the propagation time.
    pub speed: T,
    pub arrival_time: T,
    pub sample_index: usize,
}

fn check_wave_setup<T: Scalar>(spec: &PathwaySpec<T>) -> Result<()> {
    let p = spec
        .uniform_params()
        .ok_or_else(|| Error::InvalidParams("asymptotic speed requires a uniform pathway".into()))?;
    let eq = classify(&p);
    match eq.region {
        Region::Region1 => {
            return Err(Error::NoPropagation(format!(
                "phi = {} < -phi_c = {}: only the inactive state is stable (Region 1)",
                p.phi(),
                -eq.phi_c
            )))
        }
        Region::Region3 => {
            return Err(Error::NoPropagation(format!(
                "phi = {} > phi_c = {}: only the active state is stable (Region 3)",
                p.phi(),
                eq.phi_c
            )))
        }
        Region::Region2 if eq.degenerate => {
            return Err(Error::NoPropagation(format!("phi = {} sits on the bifurcation point", p.phi())))
        }
        Region::Region2 => {}
    }
    let one = T::one();
    match spec.initial() {
        InitialState::Uniform(v) if v.abs() == one && spec.boundary_input() == -*v => Ok(()),
        _ => Err(Error::InvalidParams(
            "asymptotic speed requires a uniform initial state at +-1 and the opposite boundary input".into(),
        )),
    }
}

/// Velocity of an already integrated wave at the sample nearest half its arrival time.
pub fn asymptotic_speed_of<T: Scalar>(traj: &Trajectory<T>) -> Result<SpeedMeasurement<T>> {
    let arrival = traj.arrival_time.ok_or_else(|| {
        Error::NoPropagation(format!("the terminal node did not respond before t_end = {}", traj.config.t_end))
    })?;
    if traj.len() < 2 {
        return Err(Error::TooFewSamples { found: traj.len() });
    }
    let frame = ProfileFrame::original(traj.spec.len());
    let j = traj.nearest_index(arrival / T::lit(2.0)).min(traj.len() - 2);
    let est = velocity_unchecked(&traj.samples[j].x, &traj.samples[j + 1].x, &frame, traj.sample_dt());
    Ok(SpeedMeasurement { speed: est.c, arrival_time: arrival, sample_index: j })
}

/// Integrates a uniform front until the terminal node responds and measures its speed
/// halfway through the propagation.
pub fn asymptotic_speed<T: Scalar>(spec: &PathwaySpec<T>, config: &IntegratorConfig<T>) -> Result<SpeedMeasurement<T>> {
    check_wave_setup(spec)?;
    let traj = integrate(spec, &config.with_stop_on_arrival(true))?;
    asymptotic_speed_of(&traj)
}

/// First time at which the interpolated profile at position `q` reaches `level`,
/// linearly interpolated between samples.
pub fn level_crossing_time<T: Scalar>(traj: &Trajectory<T>, frame: &ProfileFrame<T>, q: T, level: T) -> Result<T> {
    if traj.spec.len() != frame.len() {
        return Err(Error::DimensionMismatch { expected: frame.len(), found: traj.spec.len() });
    }
    let value = |k: usize| interp_profile(&traj.samples[k].x, &frame.positions, q) - level;
    let mut prev = value(0);
    if prev == T::zero() {
        return Ok(traj.samples[0].t);
    }
    for k in 1..traj.len() {
        let v = value(k);
        if v == T::zero() || (v > T::zero()) != (prev > T::zero()) {
            let (t0, t1) = (traj.samples[k - 1].t, traj.samples[k].t);
            return Ok(t0 + (t1 - t0) * prev / (prev - v));
        }
        prev = v;
    }
    Err(Error::NoCrossing(format!("profile at position {q} never reaches {level}")))
}

/// Time `t_J` at which the profile at mid-domain crosses zero.
pub fn reference_time<T: Scalar>(traj: &Trajectory<T>, frame: &ProfileFrame<T>) -> Result<T> {
    level_crossing_time(traj, frame, frame.midpoint(), T::zero())
}

/// Global shape residual of every sample against the reference profile at `t_J`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeResidualSeries<T> {
    pub frame: Frame,
    pub times: Vec<T>,
    pub values: Vec<T>,
    pub reference_time: T,
    pub reference_index: usize,
}

/// Weighted residual between `reference` and `profile` minimised over shifts in `[-L, L]`.
pub fn residual_against<T: Scalar>(reference: &[T], profile: &[T], frame: &ProfileFrame<T>) -> T {
    let len = frame.length;
    let m = grid_golden(
        |u| shifted_misfit(reference, profile, &frame.positions, u * len, Some(&frame.weights)),
        -T::one(),
        T::one(),
        GRID_POINTS,
        T::lit(SEARCH_REL_TOL),
        T::zero(),
    );
    m.fx.min(shifted_misfit(reference, profile, &frame.positions, T::zero(), Some(&frame.weights)))
}

pub fn shape_residual<T: Scalar>(
    traj: &Trajectory<T>,
    frame: &ProfileFrame<T>,
    t_ref: T,
) -> Result<ShapeResidualSeries<T>> {
    if traj.spec.len() != frame.len() {
        return Err(Error::DimensionMismatch { expected: frame.len(), found: traj.spec.len() });
    }
    let jref = traj.nearest_index(t_ref);
    let reference = &traj.samples[jref].x;
    let values = traj
        .samples
        .iter()
        .enumerate()
        .map(|(j, s)| if j == jref { T::zero() } else { residual_against(reference, &s.x, frame) })
        .collect();
    Ok(ShapeResidualSeries {
        frame: frame.kind,
        times: traj.times().collect(),
        values,
        reference_time: t_ref,
        reference_index: jref,
    })
}
