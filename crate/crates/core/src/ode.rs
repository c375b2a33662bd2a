//! Adaptive Dormand–Prince 5(4) integration of the cascade with steps landing on
//! the fixed sampling grid and terminal-node arrival detection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fill_rates, uniform_rhs, CascadeState, EdgeParams, PathwaySpec};
use crate::scalar::{domain_tol, Scalar};

/// A first-order system `dy/dt = f(t, y)`.
pub trait OdeSystem<T> {
    fn dim(&self) -> usize;
    fn rhs(&self, t: T, y: &[T], dy: &mut [T]);
}

impl<T: Scalar> OdeSystem<T> for PathwaySpec<T> {
    fn dim(&self) -> usize {
        self.len()
    }

    #[inline]
    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        fill_rates(self, y, dy);
    }
}

/// The single-node reduction obtained when every node shares the same state.
#[derive(Debug, Clone, Copy)]
pub struct UniformSystem<T>(pub EdgeParams<T>);

impl<T: Scalar> OdeSystem<T> for UniformSystem<T> {
    fn dim(&self) -> usize {
        1
    }

    fn rhs(&self, _t: T, y: &[T], dy: &mut [T]) {
        dy[0] = uniform_rhs(y[0].max(-T::one()).min(T::one()), &self.0).unwrap_or_else(|_| T::nan());
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Output sampling interval.
    pub sample_dt: T,
    pub t_end: T,
    /// Deviation of the terminal node from its initial value that counts as arrival.
    pub terminal_threshold: T,
    pub stop_on_arrival: bool,
    pub max_steps: usize,
}

impl<T: Scalar> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-8),
            abs_tol: T::lit(1e-10),
            sample_dt: T::one(),
            t_end: T::lit(1000.0),
            terminal_threshold: T::lit(1e-4),
            stop_on_arrival: false,
            max_steps: 20_000_000,
        }
    }
}

impl<T: Scalar> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let max_tol = T::lit(1e-2);
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v > T::zero() && v <= max_tol) {
                return Err(Error::InvalidParams(format!("{name} must lie in (0, 1e-2], got {v}")));
            }
        }
        if !(self.sample_dt > T::zero()) || !(self.t_end > T::zero()) || self.sample_dt > self.t_end {
            return Err(Error::InvalidParams(format!(
                "need 0 < sample_dt <= t_end, got sample_dt = {}, t_end = {}",
                self.sample_dt, self.t_end
            )));
        }
        if !(self.terminal_threshold > T::zero()) {
            return Err(Error::InvalidParams("terminal_threshold must be positive".into()));
        }
        Ok(())
    }

    pub fn with_t_end(mut self, t_end: T) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_stop_on_arrival(mut self, stop: bool) -> Self {
        self.stop_on_arrival = stop;
        self
    }
}

/// Sampled solution of one integration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<T> {
    pub spec: PathwaySpec<T>,
    pub config: IntegratorConfig<T>,
    /// States at `t_j = j * sample_dt`.
    pub samples: Vec<CascadeState<T>>,
    pub arrival_time: Option<T>,
}

impl<T: Scalar> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_dt(&self) -> T {
        self.config.sample_dt
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        self.samples.iter().map(|s| s.t)
    }

    pub fn last(&self) -> &CascadeState<T> {
        self.samples.last().expect("trajectory has at least the initial sample")
    }

    /// Index of the sample closest to `t`, clamped to the stored range.
    pub fn nearest_index(&self, t: T) -> usize {
        let j = (t / self.sample_dt()).round().to_usize().unwrap_or(0);
        j.min(self.samples.len() - 1)
    }
}

struct Tableau<T> {
    c: [T; 7],
    a: [[T; 6]; 7],
    e: [T; 7],
}

impl<T: Scalar> Tableau<T> {
    fn dopri5() -> Self {
        let l = T::lit;
        let z = T::zero();
        Self {
            c: [z, l(0.2), l(0.3), l(0.8), l(8.0 / 9.0), T::one(), T::one()],
            a: [
                [z; 6],
                [l(0.2), z, z, z, z, z],
                [l(3.0 / 40.0), l(9.0 / 40.0), z, z, z, z],
                [l(44.0 / 45.0), l(-56.0 / 15.0), l(32.0 / 9.0), z, z, z],
                [l(19372.0 / 6561.0), l(-25360.0 / 2187.0), l(64448.0 / 6561.0), l(-212.0 / 729.0), z, z],
                [l(9017.0 / 3168.0), l(-355.0 / 33.0), l(46732.0 / 5247.0), l(49.0 / 176.0), l(-5103.0 / 18656.0), z],
                [l(35.0 / 384.0), z, l(500.0 / 1113.0), l(125.0 / 192.0), l(-2187.0 / 6784.0), l(11.0 / 84.0)],
            ],
            e: [
                l(71.0 / 57600.0),
                z,
                l(-71.0 / 16695.0),
                l(71.0 / 1920.0),
                l(-17253.0 / 339200.0),
                l(22.0 / 525.0),
                l(-1.0 / 40.0),
            ],
        }
    }
}

/// Stage storage for one Dormand–Prince step. `k[0]` holds `f(t, y)` on entry
/// and `k[6]` holds `f(t + h, y_new)` on exit (first-same-as-last).
struct Stepper<T> {
    tab: Tableau<T>,
    k: [Vec<T>; 7],
    stage: Vec<T>,
    y_new: Vec<T>,
    err: Vec<T>,
}

impl<T: Scalar> Stepper<T> {
    fn new(n: usize) -> Self {
        let v = || vec![T::zero(); n];
        Self { tab: Tableau::dopri5(), k: [v(), v(), v(), v(), v(), v(), v()], stage: v(), y_new: v(), err: v() }
    }

    /// Computes `y_new` and the embedded error vector.
    fn step<S: OdeSystem<T>>(&mut self, sys: &S, t: T, y: &[T], h: T) {
        let n = y.len();
        for s in 1..7 {
            for i in 0..n {
                let mut acc = T::zero();
                for (r, a) in self.tab.a[s].iter().enumerate().take(s) {
                    acc += *a * self.k[r][i];
                }
                self.stage[i] = y[i] + h * acc;
            }
            let (_, tail) = self.k.split_at_mut(s);
            sys.rhs(t + self.tab.c[s] * h, &self.stage, &mut tail[0]);
        }
        // stage 7 was evaluated at y_new (row 7 of `a` equals `b`)
        self.y_new.copy_from_slice(&self.stage);
        for i in 0..n {
            let mut e = T::zero();
            for s in 0..7 {
                e += self.tab.e[s] * self.k[s][i];
            }
            self.err[i] = h * e;
        }
    }

    fn error_norm(&self, y: &[T], rtol: T, atol: T) -> T {
        let mut acc = T::zero();
        for i in 0..y.len() {
            let sk = atol + rtol * y[i].abs().max(self.y_new[i].abs());
            let r = self.err[i] / sk;
            acc += r * r;
        }
        (acc / T::from_usize_lossy(y.len())).sqrt()
    }
}

fn initial_step<T: Scalar, S: OdeSystem<T>>(sys: &S, t0: T, y0: &[T], f0: &[T], rtol: T, atol: T, hmax: T) -> T {
    let n = y0.len();
    let mut dnf = T::zero();
    let mut dny = T::zero();
    for i in 0..n {
        let sk = atol + rtol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h =
        if dnf <= T::lit(1e-10) || dny <= T::lit(1e-10) { T::lit(1e-6) } else { (dny / dnf).sqrt() * T::lit(0.01) };
    h = h.min(hmax);
    let y1: Vec<T> = y0.iter().zip(f0).map(|(&y, &f)| y + h * f).collect();
    let mut f1 = vec![T::zero(); n];
    sys.rhs(t0 + h, &y1, &mut f1);
    let mut der2 = T::zero();
    for i in 0..n {
        let sk = atol + rtol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h;
    let der12 = der2.abs().max(dnf.sqrt());
    let h1 = if der12 <= T::lit(1e-15) {
        T::lit(1e-6).max(h * T::lit(1e-3))
    } else {
        (T::lit(0.01) / der12).powf(T::lit(0.2))
    };
    (T::lit(100.0) * h).min(h1).min(hmax)
}

fn check_state<T: Scalar>(t: T, x: &[T]) -> Result<()> {
    let bound = T::one() + domain_tol::<T>();
    for (node, &v) in x.iter().enumerate() {
        if !(v.abs() <= bound) {
            return Err(Error::InvariantViolation { t: t.as_f64(), node: node + 1, value: v.as_f64() });
        }
    }
    Ok(())
}

/// Integrates `spec` from `t = 0` and samples the state at multiples of `sample_dt`.
pub fn integrate<T: Scalar>(spec: &PathwaySpec<T>, config: &IntegratorConfig<T>) -> Result<Trajectory<T>> {
    config.validate()?;
    let n = spec.len();
    let dt = config.sample_dt;
    let t_end = config.t_end;
    let (rtol, atol) = (config.rel_tol, config.abs_tol);
    let safe = T::lit(0.9);
    let beta = T::lit(0.04);
    let expo1 = T::lit(0.2) - beta * T::lit(0.75);
    let (facc1, facc2) = (T::lit(5.0), T::lit(0.1));

    let mut y = spec.initial_vector();
    let mut t = T::zero();
    let terminal0 = y[n - 1];
    let mut samples = vec![CascadeState::new(T::zero(), y.clone())];
    let mut arrival_time = None;
    let mut prev_dev = T::zero();
    let mut next_j = 1usize;
    let t_limit = t_end * (T::one() + T::lit(1e-12));

    let mut st = Stepper::new(n);
    spec.rhs(t, &y, &mut st.k[0]);
    let mut h = initial_step(spec, t, &y, &st.k[0].clone(), rtol, atol, t_end);
    let mut facold = T::lit(1e-4);
    let mut last_rejected = false;
    let mut steps = 0usize;
    let mut domain_rejects = 0usize;

    while t < t_end {
        if steps >= config.max_steps {
            return Err(Error::TooManySteps { t: t.as_f64(), max_steps: config.max_steps });
        }
        if T::lit(0.1) * h.abs() <= t.abs() * T::epsilon() || h <= T::zero() {
            return Err(Error::StepSizeUnderflow { t: t.as_f64() });
        }
        // steps land exactly on the next sample time
        let t_sample = (T::from_usize_lossy(next_j) * dt).min(t_end);
        let proposed = h;
        let landing = t + T::lit(1.01) * h >= t_sample;
        if landing {
            h = t_sample - t;
        }
        steps += 1;
        st.step(spec, t, &y, h);
        let err = st.error_norm(&y, rtol, atol);
        let fac11 = err.powf(expo1);
        if err <= T::one() {
            let t_new = if landing { t_sample } else { t + h };
            if let Err(e) = check_state(t_new, &st.y_new) {
                // an endpoint outside [-1, 1] counts as a rejected step
                domain_rejects += 1;
                if domain_rejects > 60 {
                    return Err(e);
                }
                h /= T::lit(2.0);
                last_rejected = true;
                continue;
            }
            domain_rejects = 0;
            let mut fac = fac11 / facold.powf(beta);
            fac = facc2.max(facc1.min(fac / safe));
            let mut h_new = h / fac;
            facold = err.max(T::lit(1e-4));
            if last_rejected {
                h_new = h_new.min(h);
            }
            if landing {
                h_new = h_new.max(proposed);
            }
            last_rejected = false;
            y.copy_from_slice(&st.y_new);
            let (first, rest) = st.k.split_at_mut(6);
            first[0].copy_from_slice(&rest[0]);
            t = t_new;
            h = h_new;
            if landing && T::from_usize_lossy(next_j) * dt <= t_limit {
                let dev = (y[n - 1] - terminal0).abs();
                samples.push(CascadeState::new(t, y.clone()));
                next_j += 1;
                if arrival_time.is_none() && dev >= config.terminal_threshold {
                    let frac = (config.terminal_threshold - prev_dev) / (dev - prev_dev);
                    arrival_time = Some(t - dt + frac * dt);
                    if config.stop_on_arrival {
                        break;
                    }
                }
                prev_dev = dev;
            }
        } else {
            h /= facc1.min(fac11 / safe);
            last_rejected = true;
        }
    }

    Ok(Trajectory { spec: spec.clone(), config: *config, samples, arrival_time })
}

/// Advances `y0` to `t_end` with `steps` equal Dormand–Prince steps (no error control).
pub fn fixed_step_solve<T: Scalar, S: OdeSystem<T>>(sys: &S, y0: &[T], t_end: T, steps: usize) -> Vec<T> {
    let n = y0.len();
    let h = t_end / T::from_usize_lossy(steps.max(1));
    let mut st = Stepper::new(n);
    let mut y = y0.to_vec();
    let mut t = T::zero();
    sys.rhs(t, &y, &mut st.k[0]);
    for _ in 0..steps.max(1) {
        st.step(sys, t, &y, h);
        y.copy_from_slice(&st.y_new);
        let (first, rest) = st.k.split_at_mut(6);
        first[0].copy_from_slice(&rest[0]);
        t += h;
    }
    y
}

/// Observed global convergence order from fixed-step runs at `h`, `h/2` and `h/4`.
///
/// Returns `+inf` when the three runs agree exactly (e.g. a zero right-hand side).
pub fn order_check_system<T: Scalar, S: OdeSystem<T>>(sys: &S, y0: &[T], t_end: T, h: T) -> T {
    let steps = (t_end / h).round().to_usize().unwrap_or(1).max(1);
    let y1 = fixed_step_solve(sys, y0, t_end, steps);
    let y2 = fixed_step_solve(sys, y0, t_end, 2 * steps);
    let y4 = fixed_step_solve(sys, y0, t_end, 4 * steps);
    let diff = |a: &[T], b: &[T]| a.iter().zip(b).fold(T::zero(), |m, (&p, &q)| m.max((p - q).abs()));
    let e1 = diff(&y1, &y2);
    let e2 = diff(&y2, &y4);
    if e2 == T::zero() {
        return T::infinity();
    }
    (e1 / e2).log2()
}

/// [`order_check_system`] applied to a pathway over `[0, t_end]`.
pub fn order_check<T: Scalar>(spec: &PathwaySpec<T>, t_end: T, h: T) -> T {
    order_check_system(spec, &spec.initial_vector(), t_end, h)
}
