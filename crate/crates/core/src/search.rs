//! Bracketed scalar minimisation: coarse grid scan followed by golden-section refinement.

use crate::scalar::Scalar;

/// Outcome of [`grid_golden`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum<T> {
    pub x: T,
    pub fx: T,
    /// The objective varied by less than `flat_tol` over the whole grid.
    pub flat: bool,
}

/// Minimises `f` over `[lo, hi]`.
///
/// The grid of `points` samples picks the basin; golden-section search then runs on the
/// two neighbouring grid cells until the bracket is below `rel_tol * |x|` (with a floor of
/// `1e-12 * (hi - lo)`).
pub fn grid_golden<T: Scalar>(
    mut f: impl FnMut(T) -> T,
    lo: T,
    hi: T,
    points: usize,
    rel_tol: T,
    flat_tol: T,
) -> Minimum<T> {
    let points = points.max(3);
    let span = hi - lo;
    let last = T::from_usize_lossy(points - 1);
    let node = |k: usize| if k == points - 1 { hi } else { lo + span * T::from_usize_lossy(k) / last };

    let mut best_k = 0;
    let mut best_f = T::infinity();
    let mut worst_f = T::neg_infinity();
    for k in 0..points {
        let v = f(node(k));
        if v < best_f {
            best_f = v;
            best_k = k;
        }
        worst_f = worst_f.max(v);
    }
    if worst_f - best_f <= flat_tol {
        return Minimum { x: node(best_k), fx: best_f, flat: true };
    }

    let mut a = node(best_k.saturating_sub(1));
    let mut b = node((best_k + 1).min(points - 1));
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let floor = T::lit(1e-12) * span.abs();
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let (mut best_x, mut best) = (node(best_k), best_f);
    for _ in 0..200 {
        let centre = if f1 < f2 { x1 } else { x2 };
        if b - a <= (rel_tol * centre.abs()).max(floor) {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    for (x, v) in [(x1, f1), (x2, f2)] {
        if v < best {
            best = v;
            best_x = x;
        }
    }
    Minimum { x: best_x, fx: best, flat: false }
}
