//! Reciprocal-velocity rescaling of node coordinates.
//!
//! Every edge is assigned the speed a wave would reach in a homogeneous pathway built
//! from that edge's parameters. Edge `i` then spans `ds_i = c_bar / c_i` of a unit domain.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::asymptotic_speed;
use crate::model::{classify, EdgeParams, PathwaySpec, Region};
use crate::ode::IntegratorConfig;
use crate::scalar::Scalar;

/// Pathway length used for homogeneous speed measurements.
pub const ORACLE_NODES: usize = 200;

/// Integration settings used by the oracle: generous horizon, halt on arrival.
pub fn oracle_config<T: Scalar>() -> IntegratorConfig<T> {
    IntegratorConfig::default().with_t_end(T::lit(1e6)).with_stop_on_arrival(true)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> CompensatedSum<T> {
    pub(crate) fn add(&mut self, v: T) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> T {
        self.sum + self.comp
    }
}

/// Homogeneous wave speed `c(1, B, phi)` measured by direct simulation.
pub fn measure_base_speed<T: Scalar>(b: T, phi: T, n: usize, config: &IntegratorConfig<T>) -> Result<T> {
    let p = EdgeParams::from_saturation(T::one(), b, phi)?;
    let spec = PathwaySpec::uniform(p, n, T::one(), -T::one())?;
    let m = asymptotic_speed(&spec, config)?;
    if !(m.speed > T::zero()) {
        return Err(Error::NoHomogeneousWave {
            edge: None,
            reason: format!("measured speed {} at B = {b}, phi = {phi}", m.speed),
        });
    }
    Ok(m.speed)
}

/// Precomputed `c(1, B, phi)` on a grid over `ln(B - 1)` and the normalised bias `phi / phi_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedTable<T> {
    #[serde(rename = "logB_grid")]
    pub log_b_grid: Vec<T>,
    /// Bias as a fraction of `phi_c = 1 / B`.
    pub phi_grid: Vec<T>,
    /// `speeds[i][j]` at `log_b_grid[i]`, `phi_grid[j]`.
    pub speeds: Vec<Vec<T>>,
}

/// `count` points evenly spaced in `ln(B - 1)` over `[lo, hi]` (values of `B - 1`).
pub fn log_grid<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    let (a, b) = (lo.ln(), hi.ln());
    let last = T::from_usize_lossy(count.max(2) - 1);
    (0..count.max(2)).map(|k| a + (b - a) * T::from_usize_lossy(k) / last).collect()
}

pub fn linear_grid<T: Scalar>(lo: T, hi: T, count: usize) -> Vec<T> {
    if count == 1 {
        return vec![(lo + hi) / T::lit(2.0)];
    }
    let last = T::from_usize_lossy(count - 1);
    (0..count).map(|k| lo + (hi - lo) * T::from_usize_lossy(k) / last).collect()
}

fn bracket<T: Scalar>(grid: &[T], v: T) -> Option<(usize, T)> {
    let n = grid.len();
    let tol = T::lit(1e-9) * (T::one() + v.abs());
    if n == 1 {
        return ((v - grid[0]).abs() <= tol).then_some((0, T::zero()));
    }
    if v < grid[0] - tol || v > grid[n - 1] + tol {
        return None;
    }
    let k = grid.partition_point(|&g| g <= v).clamp(1, n - 1) - 1;
    let w = ((v - grid[k]) / (grid[k + 1] - grid[k])).max(T::zero()).min(T::one());
    Some((k, w))
}

impl<T: Scalar> SpeedTable<T> {
    /// Default grid: 32 points over `B - 1 in [1e-2, 1e3]`, 21 bias fractions over `[-0.9, 0.9]`.
    pub fn default_grid() -> (Vec<T>, Vec<T>) {
        (log_grid(T::lit(1e-2), T::lit(1e3), 32), linear_grid(T::lit(-0.9), T::lit(0.9), 21))
    }

    /// Measures every grid node (in parallel).
    pub fn build(log_b_grid: Vec<T>, phi_grid: Vec<T>, n: usize, config: &IntegratorConfig<T>) -> Result<Self> {
        if log_b_grid.is_empty() || phi_grid.is_empty() {
            return Err(Error::InvalidParams("speed table grids must be non-empty".into()));
        }
        if log_b_grid.windows(2).any(|w| w[1] <= w[0]) || phi_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("speed table grids must be strictly increasing".into()));
        }
        if phi_grid.iter().any(|f| f.abs() >= T::one()) {
            return Err(Error::InvalidParams("bias fractions must lie strictly inside (-1, 1)".into()));
        }
        let nodes: Vec<(usize, usize)> =
            (0..log_b_grid.len()).flat_map(|i| (0..phi_grid.len()).map(move |j| (i, j))).collect();
        let flat: Vec<T> = nodes
            .par_iter()
            .map(|&(i, j)| {
                let b = T::one() + log_b_grid[i].exp();
                measure_base_speed(b, phi_grid[j] / b, n, config)
            })
            .collect::<Result<_>>()?;
        let speeds = flat.chunks(phi_grid.len()).map(<[T]>::to_vec).collect();
        Ok(Self { log_b_grid, phi_grid, speeds })
    }

    /// Bilinear interpolation of `ln c` at `(B, phi)`.
    pub fn interpolate(&self, b: T, phi: T) -> Result<T> {
        let out = || Error::TableRange { b: b.as_f64(), phi: phi.as_f64() };
        if !(b > T::one()) {
            return Err(out());
        }
        let (i, wi) = bracket(&self.log_b_grid, (b - T::one()).ln()).ok_or_else(out)?;
        let (j, wj) = bracket(&self.phi_grid, phi * b).ok_or_else(out)?;
        let i1 = (i + 1).min(self.log_b_grid.len() - 1);
        let j1 = (j + 1).min(self.phi_grid.len() - 1);
        let l = |a: usize, c: usize| self.speeds[a][c].ln();
        let one = T::one();
        let v = (one - wi) * ((one - wj) * l(i, j) + wj * l(i, j1)) + wi * ((one - wj) * l(i1, j) + wj * l(i1, j1));
        Ok(v.exp())
    }

    /// Range of `B` covered by the grid.
    pub fn b_range(&self) -> (T, T) {
        let n = self.log_b_grid.len();
        (T::one() + self.log_b_grid[0].exp(), T::one() + self.log_b_grid[n - 1].exp())
    }

    pub fn covers(&self, b_min: T, b_max: T) -> bool {
        let (lo, hi) = self.b_range();
        lo <= b_min && b_max <= hi
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self.speeds.len() != self.log_b_grid.len()
            || self.speeds.iter().any(|r| r.len() != self.phi_grid.len())
            || self.speeds.iter().flatten().any(|&c| !(c > T::zero()) || !c.is_finite());
        if bad || self.log_b_grid.is_empty() || self.phi_grid.is_empty() {
            return Err(Error::Document("speed table shape or values invalid".into()));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self>
    where
        T: for<'de> Deserialize<'de>,
    {
        let t: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        t.validate()?;
        Ok(t)
    }
}

#[derive(Debug)]
pub enum OracleMode<T> {
    /// One homogeneous simulation per distinct `(B, phi)`.
    Exact,
    Table(SpeedTable<T>),
}

/// Homogeneous-speed oracle with a concurrent cache.
#[derive(Debug)]
pub struct SpeedOracle<T> {
    mode: RwLock<OracleMode<T>>,
    nodes: usize,
    config: IntegratorConfig<T>,
    cache: RwLock<HashMap<String, T>>,
    simulations: AtomicUsize,
}

fn cache_key<T: Scalar>(b: T, phi: T) -> String {
    format!("{:.11e}|{:.11e}", b.as_f64(), phi.as_f64())
}

impl<T: Scalar> SpeedOracle<T> {
    pub fn exact() -> Self {
        Self::with_mode(OracleMode::Exact, ORACLE_NODES, oracle_config())
    }

    pub fn table(table: SpeedTable<T>) -> Self {
        Self::with_mode(OracleMode::Table(table), ORACLE_NODES, oracle_config())
    }

    pub fn with_mode(mode: OracleMode<T>, nodes: usize, config: IntegratorConfig<T>) -> Self {
        Self {
            mode: RwLock::new(mode),
            nodes,
            config,
            cache: RwLock::new(HashMap::new()),
            simulations: AtomicUsize::new(0),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(*self.mode.read().expect("oracle lock"), OracleMode::Exact)
    }

    /// Number of homogeneous simulations run so far (excluding table builds).
    pub fn simulations(&self) -> usize {
        self.simulations.load(Ordering::Relaxed)
    }

    pub fn table_snapshot(&self) -> Option<SpeedTable<T>> {
        match &*self.mode.read().expect("oracle lock") {
            OracleMode::Table(t) => Some(t.clone()),
            OracleMode::Exact => None,
        }
    }

    /// `c(1, B, phi)`.
    pub fn base_speed(&self, b: T, phi: T) -> Result<T> {
        if let OracleMode::Table(t) = &*self.mode.read().expect("oracle lock") {
            return t.interpolate(b, phi);
        }
        let key = cache_key(b, phi);
        if let Some(&c) = self.cache.read().expect("oracle cache lock").get(&key) {
            return Ok(c);
        }
        self.simulations.fetch_add(1, Ordering::Relaxed);
        let c = measure_base_speed(b, phi, self.nodes, &self.config)?;
        self.cache.write().expect("oracle cache lock").insert(key, c);
        Ok(c)
    }

    /// Measures all distinct `(B, phi)` pairs in parallel so later lookups hit the cache.
    pub fn prefetch(&self, pairs: &[(T, T)]) -> Result<()> {
        if !self.is_exact() {
            return Ok(());
        }
        let mut todo: Vec<(T, T)> = Vec::new();
        {
            let cache = self.cache.read().expect("oracle cache lock");
            let mut seen = std::collections::HashSet::new();
            for &(b, phi) in pairs {
                let k = cache_key(b, phi);
                if !cache.contains_key(&k) && seen.insert(k) {
                    todo.push((b, phi));
                }
            }
        }
        todo.par_iter().try_for_each(|&(b, phi)| self.base_speed(b, phi).map(|_| ()))
    }

    /// Rebuilds a table-mode grid when `[b_min, b_max]` (widened by `margin`) is not covered.
    /// The rebuilt grid keeps the bias fractions and the point density in `ln(B - 1)`.
    pub fn ensure_coverage(&self, b_min: T, b_max: T, margin: T) -> Result<bool> {
        let mut mode = self.mode.write().expect("oracle lock");
        let OracleMode::Table(table) = &mut *mode else {
            return Ok(false);
        };
        if table.covers(b_min, b_max) {
            return Ok(false);
        }
        let (lo, hi) = table.b_range();
        let one = T::one();
        let want_lo = T::one() + (b_min - one) / (one + margin);
        let want_hi = T::one() + (b_max - one) * (one + margin);
        let new_lo = lo.min(want_lo) - one;
        let new_hi = hi.max(want_hi) - one;
        let old = table.log_b_grid.len();
        let density = if old > 1 {
            T::from_usize_lossy(old - 1) / (table.log_b_grid[old - 1] - table.log_b_grid[0])
        } else {
            T::lit(3.0)
        };
        let count = ((new_hi.ln() - new_lo.ln()) * density).ceil().to_usize().unwrap_or(2).max(2) + 1;
        *table = SpeedTable::build(log_grid(new_lo, new_hi, count), table.phi_grid.clone(), self.nodes, &self.config)?;
        Ok(true)
    }
}

/// Speed `alpha * c(1, B, phi)` of a homogeneous pathway made of edges `p`.
pub fn edge_speed<T: Scalar>(p: &EdgeParams<T>, oracle: &SpeedOracle<T>) -> Result<T> {
    let eq = classify(p);
    if eq.region != Region::Region2 || eq.degenerate {
        return Err(Error::NoHomogeneousWave {
            edge: None,
            reason: format!("phi = {} is outside the bistable window (-{}, {})", p.phi(), eq.phi_c, eq.phi_c),
        });
    }
    Ok(p.alpha() * oracle.base_speed(p.saturation(), p.phi())?)
}

/// Rescaled node positions `s_0 = 0 < s_1 < ... < s_N = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledCoordinates<T> {
    pub s: Vec<T>,
    pub ds: Vec<T>,
    pub c_bar: T,
    /// Homogeneous speed of every edge.
    pub speeds: Vec<T>,
}

/// Builds coordinates from per-edge speeds.
pub fn coordinates_from_speeds<T: Scalar>(speeds: Vec<T>) -> Result<RescaledCoordinates<T>> {
    if speeds.is_empty() || speeds.iter().any(|&c| !(c > T::zero()) || !c.is_finite()) {
        return Err(Error::InvalidParams("edge speeds must be positive and finite".into()));
    }
    let mut inv = CompensatedSum::default();
    for &c in &speeds {
        inv.add(T::one() / c);
    }
    let c_bar = T::one() / inv.value();
    let n = speeds.len();
    let mut ds: Vec<T> = speeds.iter().map(|&c| c_bar / c).collect();
    let mut s = Vec::with_capacity(n + 1);
    s.push(T::zero());
    let mut acc = CompensatedSum::default();
    for &d in &ds[..n - 1] {
        acc.add(d);
        s.push(acc.value());
    }
    ds[n - 1] = T::one() - s[n - 1];
    s.push(T::one());
    Ok(RescaledCoordinates { s, ds, c_bar, speeds })
}

pub fn rescale<T: Scalar>(spec: &PathwaySpec<T>, oracle: &SpeedOracle<T>) -> Result<RescaledCoordinates<T>> {
    let pairs: Vec<(T, T)> = spec
        .edges()
        .iter()
        .filter(|p| classify(*p).region == Region::Region2)
        .map(|p| (p.saturation(), p.phi()))
        .collect();
    oracle.prefetch(&pairs)?;
    let speeds = spec
        .edges()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            edge_speed(p, oracle).map_err(|e| match e {
                Error::NoHomogeneousWave { reason, .. } => Error::NoHomogeneousWave { edge: Some(i + 1), reason },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    coordinates_from_speeds(speeds)
}
