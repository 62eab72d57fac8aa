//! Bounded scalar minimization.

use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Stops once the bracket width falls below `abs_tol + rel_tol * max(|a|, |b|)`.
/// The best evaluated point is returned, so for non-unimodal `f` the result
/// is still a point that was actually visited.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<Minimum> {
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::domain(format!("invalid bracket [{a}, {b}]")));
    }
    if !(abs_tol >= 0.0 && rel_tol >= 0.0) || abs_tol + rel_tol == 0.0 {
        return Err(Error::domain("tolerances must be >= 0 and not both zero"));
    }
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evaluations = 2;
    let mut best = if f2 < f1 { (x2, f2) } else { (x1, f1) };

    for _ in 0..max_iter {
        if hi - lo <= abs_tol + rel_tol * lo.abs().max(hi.abs()) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
        evaluations += 1;
    }
    Ok(Minimum {
        x: best.0,
        value: best.1,
        evaluations,
    })
}
