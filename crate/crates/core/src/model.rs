//! Cascade model: edge kinetics, pathway right-hand side, uniform equilibria
//! and the three dynamical regions of the uniform system.
//!
//! Node states live in `[-1, 1]`; `+1` is fully active, `-1` fully inactive.
//! Each edge `i` connects node `i - 1` to node `i` and carries a timescale
//! `alpha > 0`, a saturation parameter `beta > 1` and a bias `phi in [-1, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{domain_tol, Scalar};

/// Kinetic parameters of a single edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeParams<T> {
    alpha: T,
    beta: T,
    phi: T,
}

impl<T: Scalar> EdgeParams<T> {
    pub fn new(alpha: T, beta: T, phi: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidParams(format!("alpha must be positive, got {alpha}")));
        }
        if !(beta > T::one()) || !beta.is_finite() {
            return Err(Error::InvalidParams(format!("beta must exceed 1, got {beta}")));
        }
        if !(phi >= -T::one() && phi <= T::one()) {
            return Err(Error::InvalidParams(format!("phi must lie in [-1, 1], got {phi}")));
        }
        Ok(Self { alpha, beta, phi })
    }

    /// Builds parameters from the saturation measure `B = 2 beta - 1` instead of `beta`.
    pub fn from_saturation(alpha: T, b: T, phi: T) -> Result<Self> {
        if !(b > T::one()) {
            return Err(Error::InvalidParams(format!("B must exceed 1, got {b}")));
        }
        Self::new(alpha, (b + T::one()) / T::lit(2.0), phi)
    }

    #[inline]
    pub fn alpha(&self) -> T {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> T {
        self.beta
    }

    #[inline]
    pub fn phi(&self) -> T {
        self.phi
    }

    /// Saturation measure `B = 2 beta - 1 > 1`.
    #[inline]
    pub fn saturation(&self) -> T {
        T::lit(2.0) * self.beta - T::one()
    }

    /// Critical bias `1 / B`.
    #[inline]
    pub fn phi_c(&self) -> T {
        T::one() / self.saturation()
    }

    /// Interior equilibrium `-phi B` of the uniform system (may lie outside `[-1, 1]`).
    #[inline]
    pub fn separatrix(&self) -> T {
        -self.phi * self.saturation()
    }

    pub fn with_alpha(&self, alpha: T) -> Result<Self> {
        Self::new(alpha, self.beta, self.phi)
    }

    pub fn with_phi(&self, phi: T) -> Result<Self> {
        Self::new(self.alpha, self.beta, phi)
    }
}

/// Initial node states of a pathway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialState<T> {
    /// Every node starts at the same value (normally `-1` or `+1`).
    Uniform(T),
    Explicit(Vec<T>),
}

/// A feed-forward pathway: `N` edges, a constant boundary input `x0` and initial states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwaySpec<T> {
    edges: Vec<EdgeParams<T>>,
    boundary_input: T,
    initial: InitialState<T>,
}

impl<T: Scalar> PathwaySpec<T> {
    pub fn new(edges: Vec<EdgeParams<T>>, boundary_input: T, initial: InitialState<T>) -> Result<Self> {
        let n = edges.len();
        if n < 2 {
            return Err(Error::InvalidParams(format!("pathway needs at least 2 nodes, got {n}")));
        }
        check_unit(boundary_input, "boundary input")?;
        match &initial {
            InitialState::Uniform(v) => check_unit(*v, "initial state")?,
            InitialState::Explicit(v) => {
                if v.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: v.len() });
                }
                for &xi in v {
                    check_unit(xi, "initial state")?;
                }
            }
        }
        Ok(Self { edges, boundary_input, initial })
    }

    /// Homogeneous pathway of `n` identical edges.
    pub fn uniform(params: EdgeParams<T>, n: usize, boundary_input: T, initial: T) -> Result<Self> {
        Self::new(vec![params; n], boundary_input, InitialState::Uniform(initial))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    #[inline]
    pub fn edges(&self) -> &[EdgeParams<T>] {
        &self.edges
    }

    #[inline]
    pub fn boundary_input(&self) -> T {
        self.boundary_input
    }

    pub fn initial(&self) -> &InitialState<T> {
        &self.initial
    }

    pub fn initial_vector(&self) -> Vec<T> {
        match &self.initial {
            InitialState::Uniform(v) => vec![*v; self.len()],
            InitialState::Explicit(v) => v.clone(),
        }
    }

    /// Returns the shared edge parameters if every edge is identical.
    pub fn uniform_params(&self) -> Option<EdgeParams<T>> {
        let first = self.edges[0];
        self.edges.iter().all(|e| *e == first).then_some(first)
    }

    pub fn with_boundary_input(&self, x0: T) -> Result<Self> {
        Self::new(self.edges.clone(), x0, self.initial.clone())
    }

    pub fn with_initial(&self, initial: InitialState<T>) -> Result<Self> {
        Self::new(self.edges.clone(), self.boundary_input, initial)
    }

    /// Multiplies every `alpha_i` by `factor`.
    pub fn scale_alpha(&self, factor: T) -> Result<Self> {
        let edges = self.edges.iter().map(|e| e.with_alpha(e.alpha() * factor)).collect::<Result<Vec<_>>>()?;
        Self::new(edges, self.boundary_input, self.initial.clone())
    }
}

fn check_unit<T: Scalar>(v: T, what: &'static str) -> Result<()> {
    if v.is_nan() || v.abs() > T::one() + domain_tol::<T>() {
        return Err(Error::Domain { what, value: v.as_f64() });
    }
    Ok(())
}

/// Node states at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeState<T> {
    pub t: T,
    pub x: Vec<T>,
}

impl<T: Scalar> CascadeState<T> {
    pub fn new(t: T, x: Vec<T>) -> Self {
        Self { t, x }
    }
}

/// Rate of change of a node given its upstream neighbour, without domain checks.
#[inline]
pub(crate) fn edge_rate<T: Scalar>(upstream: T, local: T, p: &EdgeParams<T>) -> T {
    let one = T::one();
    let two_beta = p.beta + p.beta;
    let ab = p.alpha * p.beta * T::lit(0.25);
    let on = (one + p.phi) * (one + upstream) * (one - local) / (two_beta - (one + local));
    let off = (one - p.phi) * (one - upstream) * (one + local) / (two_beta - (one - local));
    ab * (on - off)
}

/// Rate `f_i(x_{i-1}, x_i)` of a downstream node driven by its upstream neighbour.
pub fn edge_rhs<T: Scalar>(upstream: T, local: T, p: &EdgeParams<T>) -> Result<T> {
    check_unit(upstream, "upstream state")?;
    check_unit(local, "local state")?;
    Ok(edge_rate(upstream, local, p))
}

/// Writes the rate of every node into `out`. The first node is driven by the boundary input.
#[inline]
pub(crate) fn fill_rates<T: Scalar>(spec: &PathwaySpec<T>, x: &[T], out: &mut [T]) {
    let mut upstream = spec.boundary_input;
    for ((o, &xi), p) in out.iter_mut().zip(x).zip(&spec.edges) {
        *o = edge_rate(upstream, xi, p);
        upstream = xi;
    }
}

/// Right-hand side of the whole pathway at `state`.
pub fn pathway_rhs<T: Scalar>(state: &CascadeState<T>, spec: &PathwaySpec<T>) -> Result<Vec<T>> {
    if state.x.len() != spec.len() {
        return Err(Error::DimensionMismatch { expected: spec.len(), found: state.x.len() });
    }
    for &xi in &state.x {
        check_unit(xi, "node state")?;
    }
    let mut out = vec![T::zero(); spec.len()];
    fill_rates(spec, &state.x, &mut out);
    Ok(out)
}

/// Reduced dynamics when every node shares the same state `x`.
pub fn uniform_rhs<T: Scalar>(x: T, p: &EdgeParams<T>) -> Result<T> {
    check_unit(x, "uniform state")?;
    let b = p.saturation();
    let num = p.alpha * p.beta * (T::one() - x * x) * (x + p.phi * b);
    let den = T::lit(2.0) * (b * b - x * x);
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `phi < -phi_c`: only the inactive state is stable.
    Region1,
    /// `|phi| <= phi_c`: bistable, separated by the interior equilibrium.
    Region2,
    /// `phi > phi_c`: only the active state is stable.
    Region3,
}

/// Uniform equilibria and their stability for one set of edge parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSet<T> {
    pub region: Region,
    pub stable: Vec<T>,
    pub unstable: Vec<T>,
    pub xi: Option<T>,
    pub phi_c: T,
    /// Set when `phi = +-phi_c`: the interior equilibrium merges with a boundary state.
    pub degenerate: bool,
}

pub fn classify<T: Scalar>(p: &EdgeParams<T>) -> EquilibriumSet<T> {
    let phi_c = p.phi_c();
    let one = T::one();
    if p.phi < -phi_c {
        EquilibriumSet {
            region: Region::Region1,
            stable: vec![-one],
            unstable: vec![one],
            xi: None,
            phi_c,
            degenerate: false,
        }
    } else if p.phi > phi_c {
        EquilibriumSet {
            region: Region::Region3,
            stable: vec![one],
            unstable: vec![-one],
            xi: None,
            phi_c,
            degenerate: false,
        }
    } else {
        let xi = p.separatrix();
        let degenerate = (xi.abs() - one).abs() <= T::lit(1e-12);
        EquilibriumSet {
            region: Region::Region2,
            stable: vec![-one, one],
            unstable: vec![xi],
            xi: Some(xi),
            phi_c,
            degenerate,
        }
    }
}
