//! Stationary spatial profiles under a constant boundary input.
//!
//! At steady state each node balances its upstream neighbour, which yields a
//! quadratic in `x_i` with exactly one root in `(-1, 1)`. Iterating that root
//! map from `x0` gives the exact stationary distribution; its tail decays
//! geometrically with rate `lambda` and is shifted by a penetration depth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::EdgeParams;
use crate::scalar::{domain_tol, Scalar};

/// Lower and upper bounds on the tail deviations used for depth fitting.
pub const TAIL_EPS_MIN: f64 = 1e-10;
pub const TAIL_EPS_MAX: f64 = 1e-3;
/// Minimum number of tail points for a fit.
pub const TAIL_MIN_POINTS: usize = 5;

/// Root map without domain checks; analytic for all `|x_prev| <= 1` and slightly beyond.
///
/// Written in rationalised form `2B(phi + u) / ((B-1)(1 + phi u) + sqrt(...))`, which has
/// no cancellation anywhere and is exactly zero at `u = -phi`.
#[inline]
pub(crate) fn map_unchecked<T: Scalar>(x_prev: T, phi: T, b: T) -> T {
    let one = T::one();
    let s = phi + x_prev;
    let a = (b - one) * (one + phi * x_prev);
    let disc = (a * a + T::lit(4.0) * b * s * s).sqrt();
    T::lit(2.0) * b * s / (a + disc)
}

/// One step of the stationary map: the steady state of node `i` given node `i - 1`.
pub fn stationary_map<T: Scalar>(x_prev: T, p: &EdgeParams<T>) -> Result<T> {
    let one = T::one();
    if x_prev.is_nan() || x_prev.abs() > one + domain_tol::<T>() {
        return Err(Error::Domain { what: "x_prev", value: x_prev.as_f64() });
    }
    if x_prev.abs() >= one {
        return Ok(x_prev.signum());
    }
    Ok(map_unchecked(x_prev, p.phi(), p.saturation()))
}

/// Geometric decay rate of the stationary tail towards `limit` (`+1` or `-1`).
pub fn decay_rate<T: Scalar>(p: &EdgeParams<T>, limit: T) -> Result<T> {
    let one = T::one();
    let phi = p.phi();
    if phi.abs() >= one {
        return Err(Error::DecayRate(format!("singular at phi = {phi}")));
    }
    if limit != one && limit != -one {
        return Err(Error::DecayRate(format!("limit must be +1 or -1, got {limit}")));
    }
    let b = p.saturation();
    let ratio = (one - phi) / (one + phi);
    let prefactor = if limit > T::zero() { ratio } else { one / ratio };
    let lambda = prefactor * (b - one) / (b + one);
    if !(lambda < one) {
        return Err(Error::DecayRate(format!("limit {limit} is not attracting under the map (lambda = {lambda})")));
    }
    Ok(lambda)
}

/// Closed-form penetration depth in the unbiased case.
pub fn penetration_depth_approx<T: Scalar>(x0: T, p: &EdgeParams<T>) -> Result<T> {
    if p.phi() != T::zero() {
        return Err(Error::BiasedDepth { phi: p.phi().as_f64() });
    }
    if x0 == T::zero() {
        return Err(Error::DivergentDepth);
    }
    if x0.is_nan() || x0.abs() > T::one() {
        return Err(Error::Domain { what: "x0", value: x0.as_f64() });
    }
    let lambda = decay_rate(p, x0.signum())?;
    let a = x0.abs();
    Ok((T::lit(2.0) * a * a / (T::one() + a)).ln() / lambda.ln())
}

/// Fits the shift `delta` in `eps_i = (1 - |x0|) lambda^(i - delta)` with `lambda` held fixed.
///
/// `eps[k]` is the deviation at node `i = k + 1`. Only points with
/// `eps in [TAIL_EPS_MIN, TAIL_EPS_MAX]` enter the least-squares fit.
pub fn fit_tail_shift<T: Scalar>(eps: &[T], x0: T, lambda: T) -> Result<T> {
    let lo = T::lit(TAIL_EPS_MIN);
    let hi = T::lit(TAIL_EPS_MAX);
    let ln_lambda = lambda.ln();
    let ln_amp = (T::one() - x0.abs()).ln();
    let mut sum = T::zero();
    let mut count = 0usize;
    for (k, &e) in eps.iter().enumerate() {
        if e >= lo && e <= hi {
            let i = T::from_usize_lossy(k + 1);
            sum += i - (e.ln() - ln_amp) / ln_lambda;
            count += 1;
        }
    }
    if count < TAIL_MIN_POINTS {
        return Err(Error::TailNotConverged { found: count, required: TAIL_MIN_POINTS });
    }
    Ok(sum / T::from_usize_lossy(count))
}

/// Stationary distribution generated from a constant input `x0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryProfile<T> {
    pub x0: T,
    pub params: EdgeParams<T>,
    /// `x_1 .. x_n`.
    pub values: Vec<T>,
    /// Asymptotic state (`+1` or `-1`).
    pub limit: T,
    pub lambda: T,
    /// Only defined for unbiased edges.
    pub delta_i_approx: Option<T>,
    pub delta_i_fit: Option<T>,
}

impl<T: Scalar> StationaryProfile<T> {
    /// Deviations `|limit - x_i|` for `i = 1..n`.
    pub fn deviations(&self) -> Vec<T> {
        self.values.iter().map(|&v| (self.limit - v).abs()).collect()
    }
}

/// Iterates the stationary map `n` times from `x0`. With `fit` set, also extracts
/// the tail-fitted penetration depth.
pub fn stationary_profile<T: Scalar>(x0: T, p: &EdgeParams<T>, n: usize, fit: bool) -> Result<StationaryProfile<T>> {
    if x0.is_nan() || x0.abs() >= T::one() {
        return Err(Error::Domain { what: "x0", value: x0.as_f64() });
    }
    if n == 0 {
        return Err(Error::InvalidParams("profile length must be at least 1".into()));
    }
    let xi = p.separatrix();
    if x0 == xi {
        return Err(Error::Separatrix { x0: x0.as_f64() });
    }
    let limit = if x0 > xi { T::one() } else { -T::one() };
    let lambda = decay_rate(p, limit)?;
    let mut values = Vec::with_capacity(n);
    let mut x = x0;
    for _ in 0..n {
        x = stationary_map(x, p)?;
        values.push(x);
    }
    let delta_i_approx = if p.phi() == T::zero() { Some(penetration_depth_approx(x0, p)?) } else { None };
    let mut profile = StationaryProfile { x0, params: *p, values, limit, lambda, delta_i_approx, delta_i_fit: None };
    if fit {
        profile.delta_i_fit = Some(penetration_depth_fit(&profile)?);
    }
    Ok(profile)
}

/// Tail-fitted penetration depth of an exact profile.
pub fn penetration_depth_fit<T: Scalar>(profile: &StationaryProfile<T>) -> Result<T> {
    fit_tail_shift(&profile.deviations(), profile.x0, profile.lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pb(b: f64, phi: f64) -> EdgeParams<f64> {
        EdgeParams::from_saturation(1.0, b, phi).unwrap()
    }

    #[test]
    fn map_examples() {
        let g = stationary_map(0.5, &pb(3.0, 0.0)).unwrap();
        assert!((g - (7.0f64.sqrt() - 2.0)).abs() < 1e-15);
        assert_eq!(stationary_map(1.0, &pb(3.0, 0.4)).unwrap(), 1.0);
        assert_eq!(stationary_map(-1.0, &pb(3.0, 0.4)).unwrap(), -1.0);
        assert_eq!(stationary_map(-0.3, &pb(3.0, 0.3)).unwrap(), 0.0);
        assert!(matches!(stationary_map(1.5, &pb(3.0, 0.0)), Err(Error::Domain { .. })));
    }

    #[test]
    fn map_is_continuous_through_the_removable_point() {
        let p = pb(4.0, 0.2);
        let left = stationary_map(-0.2 - 1e-12, &p).unwrap();
        let right = stationary_map(-0.2 + 1e-12, &p).unwrap();
        assert!(left < 0.0 && right > 0.0);
        assert!(left.abs() < 1e-11 && right.abs() < 1e-11);
    }

    #[test]
    fn decay_rate_examples() {
        assert!((decay_rate(&pb(3.0, 0.0), 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((decay_rate(&pb(2.0, 0.0), 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((decay_rate(&pb(3.0, 0.2), 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((decay_rate(&pb(3.0, -0.2), -1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(decay_rate(&pb(3.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn depth_approx_examples() {
        let d = penetration_depth_approx(0.6, &pb(3.0, 0.0)).unwrap();
        assert!((d - 0.45f64.ln() / 0.5f64.ln()).abs() < 1e-12);
        assert!((d - 1.1520).abs() < 1e-4);
        assert!(penetration_depth_approx(1.0, &pb(3.0, 0.0)).unwrap().abs() < 1e-15);
        assert!(penetration_depth_approx(0.005, &pb(1.5, 0.0)).unwrap() > 5.0);
        assert!(matches!(penetration_depth_approx(0.0, &pb(3.0, 0.0)), Err(Error::DivergentDepth)));
        assert!(matches!(penetration_depth_approx(0.5, &pb(3.0, 0.1)), Err(Error::BiasedDepth { .. })));
    }

    #[test]
    fn tail_fit_recovers_exact_shift() {
        let lambda: f64 = 0.4;
        let x0: f64 = 0.3;
        let eps: Vec<f64> = (1..=60).map(|i| (1.0 - x0) * lambda.powf(i as f64 - 2.0)).collect();
        let d = fit_tail_shift(&eps, x0, lambda).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
    }

    #[test]
    fn tail_fit_requires_converged_tail() {
        let p = pb(10.0, 0.0);
        let prof = stationary_profile(0.05, &p, 20, false).unwrap();
        assert!(matches!(penetration_depth_fit(&prof), Err(Error::TailNotConverged { .. })));
    }

    #[test]
    fn profile_examples() {
        let prof = stationary_profile(0.6, &pb(1.5, 0.0), 10, false).unwrap();
        assert_eq!(prof.limit, 1.0);
        assert!(prof.values.windows(2).all(|w| w[1] > w[0]));
        assert!(prof.values[0] > 0.6 && prof.values[9] < 1.0);

        let neg = stationary_profile(-0.6, &pb(1.5, 0.0), 10, false).unwrap();
        for (a, b) in prof.values.iter().zip(&neg.values) {
            assert_eq!(*a, -*b);
        }

        let slow = stationary_profile(0.05, &pb(10.0, 0.0), 200, true).unwrap();
        // lingers near the input for several nodes before the tail takes over
        assert!(slow.values[4] < 0.1);
        assert!(slow.values[199] > 1.0 - 1e-10);
        assert!(slow.delta_i_fit.unwrap() > 10.0);
    }

    #[test]
    fn profile_rejects_separatrix() {
        let p = pb(3.0, 0.2);
        let xi = p.separatrix();
        assert!(matches!(stationary_profile(xi, &p, 10, false), Err(Error::Separatrix { .. })));
    }

    #[test]
    fn biased_profile_has_no_approx_depth() {
        let prof = stationary_profile(-0.1, &pb(3.0, 0.2), 50, true).unwrap();
        assert_eq!(prof.limit, 1.0);
        assert!(prof.delta_i_approx.is_none());
        assert!(prof.delta_i_fit.is_some());
    }

    #[test]
    fn continuum_depth_exceeds_tail_fit() {
        // the discrete map leaves the separatrix at rate B/(B-1) > exp(1/B), so it lingers less
        for b in [1.5, 3.0, 5.0, 10.0] {
            for x0 in [0.005, 0.05, 0.2, 0.6] {
                let prof = stationary_profile(x0, &pb(b, 0.0), 400, true).unwrap();
                assert!(prof.delta_i_fit.unwrap() < prof.delta_i_approx.unwrap());
            }
        }
        let prof = stationary_profile(0.6, &pb(3.0, 0.0), 100, true).unwrap();
        assert!((prof.delta_i_fit.unwrap() - 0.958).abs() < 1e-3);
    }

    #[test]
    fn approximation_improves_with_saturation() {
        let rel = |b: f64| {
            let prof = stationary_profile(0.2, &pb(b, 0.0), 400, true).unwrap();
            let (f, a) = (prof.delta_i_fit.unwrap(), prof.delta_i_approx.unwrap());
            (f - a).abs() / f
        };
        assert!(rel(10.0) < rel(1.5));
    }

    fn residual(u: f64, x: f64, phi: f64, b: f64) -> f64 {
        // x^2 + (B - 1) chi x - B with chi = (1 + phi u) / (phi + u), scaled by (phi + u)
        let s = phi + u;
        let a = 1.0 + phi * u;
        let terms = [s * x * x, (b - 1.0) * a * x, b * s];
        let r = terms[0] + terms[1] - terms[2];
        r.abs() / terms.iter().map(|t| t.abs()).sum::<f64>()
    }

    proptest! {
        #[test]
        fn odd_symmetry_when_unbiased(b in 1.01f64..50.0, x in -0.999f64..0.999) {
            let p = pb(b, 0.0);
            prop_assert_eq!(stationary_map(-x, &p).unwrap(), -stationary_map(x, &p).unwrap());
        }

        #[test]
        fn root_satisfies_balance(b in 1.01f64..50.0, frac in -0.99f64..0.99, u in -0.9999f64..0.9999) {
            let phi = frac / b;
            let x = stationary_map(u, &pb(b, phi)).unwrap();
            prop_assert!(x.abs() < 1.0);
            prop_assert!(residual(u, x, phi, b) < 1e-12);
        }
    }
}
