//! Special functions used by the asymptotic rates and their inversions.
//!
//! Everything here is real-valued and restricted to the arguments the rate
//! formulas need: positive arguments for Gamma/Beta, `s > 1` for zeta,
//! `p >= 1, x > 0` for the generalized exponential integral and the
//! principal branch of Lambert W.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};

/// Accuracy target and iteration cap for the iterative routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecFunTolerance {
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for SpecFunTolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_iter: 200,
        }
    }
}

impl SpecFunTolerance {
    pub fn new(abs_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::domain(format!("abs_tol must be > 0, got {abs_tol}")));
        }
        if max_iter == 0 {
            return Err(Error::domain("max_iter must be >= 1"));
        }
        Ok(Self { abs_tol, max_iter })
    }
}

// Lanczos approximation, g = 7, 9 terms. Relative error ~1e-15 on x >= 1/2.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn ln_gamma_lanczos(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x), with sin > 0 on (0, 1/2).
        return (PI / (PI * x).sin()).ln() - ln_gamma_lanczos(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Natural log of the Gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_lanczos(x))
}

/// Gamma function for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    ln_gamma(x).map(f64::exp)
}

/// Euler Beta function `B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)`.
pub fn beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!(
            "beta requires a, b > 0, got ({a}, {b})"
        )));
    }
    Ok((ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?).exp())
}

// B_{2j} / (2j)! for j = 1..=6.
const BERNOULLI_OVER_FACTORIAL: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
];

/// Riemann zeta for real `s > 1`.
///
/// Partial sum up to `N - 1` plus the Euler-Maclaurin tail: the integral
/// `N^{1-s}/(s-1)`, the endpoint term `N^{-s}/2` and six Bernoulli
/// corrections. With `N = 32` the truncation error is far below 1e-14 for
/// every `s > 1`.
pub fn zeta(s: f64) -> Result<f64> {
    if !(s > 1.0) {
        return Err(Error::domain(format!("zeta diverges for s <= 1, got {s}")));
    }
    const N: u32 = 32;
    let n = f64::from(N);
    let mut sum = 0.0;
    for k in (1..N).rev() {
        sum += f64::from(k).powf(-s);
    }
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    // s (s+1) ... (s+2j-2) N^{-s-2j+1}
    let mut rising = s;
    let mut npow = n.powf(-s - 1.0);
    for (j, coeff) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        sum += coeff * rising * npow;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        npow /= n * n;
    }
    Ok(sum)
}

/// Generalized exponential integral `E_p(x) = int_1^inf e^{-xu} u^{-p} du`.
///
/// With `u = 1 + v/x`, `E_p(x) = e^{-x}/x * int_0^inf e^{-v} (1 + v/x)^{-p} dv`;
/// the remaining integrand is bounded by `e^{-v}`, so truncating at `v = 60`
/// loses nothing at double precision and the quadrature has uniform relative
/// accuracy in `x`.
pub fn gen_exp_integral(p: f64, x: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::domain(format!("E_p requires p >= 1, got {p}")));
    }
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("E_p requires x > 0, got {x}")));
    }
    let integrand = |v: f64| (-v - p * (v / x).ln_1p()).exp();
    let breaks = [0.1 * x, x, 10.0 * x, 1.0];
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-14,
        max_intervals: 4000,
    };
    let tail = quad::integrate(integrand, 0.0, 60.0, &breaks, opts)?;
    Ok((-x).exp() / x * tail)
}

/// Supremum of `E_p` on `(0, inf)`: `1/(p-1)` for `p > 1`, infinite at `p = 1`.
pub fn gen_exp_integral_sup(p: f64) -> f64 {
    if p > 1.0 {
        1.0 / (p - 1.0)
    } else {
        f64::INFINITY
    }
}

/// Inverse of `x -> E_p(x)` with the default tolerance.
pub fn gen_exp_integral_inverse(p: f64, y: f64) -> Result<f64> {
    gen_exp_integral_inverse_with(p, y, SpecFunTolerance::default())
}

/// Inverse of the strictly decreasing map `x -> E_p(x)`.
///
/// The bracket comes from the integer-order bounds
/// `e^{-x}/(x + ceil(p)) <= E_p(x) <= e^{-x}/(x + floor(p) - 1)`;
/// bisection then runs until the bracket is at machine resolution or the
/// value matches within `tol.abs_tol`, whichever is tighter.
pub fn gen_exp_integral_inverse_with(p: f64, y: f64, tol: SpecFunTolerance) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::domain(format!(
            "E_p inverse requires p >= 1, got {p}"
        )));
    }
    let sup = gen_exp_integral_sup(p);
    if !(y > 0.0) || y >= sup {
        return Err(Error::domain(format!(
            "E_{p} takes values in (0, {sup}); {y} is not attainable"
        )));
    }
    let p_floor = p.floor();
    let p_ceil = p.ceil();

    // Upper end: E_p(hi) <= e^{-hi}/(hi + floor(p) - 1) <= y.
    let mut hi = (-y.ln()).max(1.0);
    while (-hi).exp() / (hi + p_floor - 1.0) > y {
        hi *= 2.0;
    }

    // Lower end: first from the lower bound, then by direct evaluation when
    // y is too close to the supremum for the bound to certify it.
    let mut lo = hi;
    let mut certified = false;
    for _ in 0..tol.max_iter {
        lo *= 0.5;
        if (-lo).exp() / (lo + p_ceil) >= y {
            certified = true;
            break;
        }
        if lo < 1e-3 {
            break;
        }
    }
    if !certified {
        loop {
            if gen_exp_integral(p, lo)? >= y {
                break;
            }
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::domain(format!(
                    "E_{p}^-1({y}) below representable range"
                )));
            }
        }
    }

    for _ in 0..tol.max_iter {
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let v = gen_exp_integral(p, mid)?;
        if v >= y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    let residual = (gen_exp_integral(p, x)? - y).abs();
    if residual > tol.abs_tol.max(1e-12 * y) {
        return Err(Error::domain(format!(
            "E_{p} inverse did not converge: residual {residual:e} at x = {x}"
        )));
    }
    Ok(x)
}

/// Principal branch of Lambert W with the default tolerance.
pub fn lambert_w(y: f64) -> Result<f64> {
    lambert_w_with(y, SpecFunTolerance::default())
}

/// Principal branch `W_0(y)` for `y >= 0` by Halley iteration.
pub fn lambert_w_with(y: f64, tol: SpecFunTolerance) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::domain(format!("lambert_w needs y >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let mut w = if y < 3.0 {
        y.ln_1p()
    } else {
        let l1 = y.ln();
        l1 - l1.ln()
    };
    for _ in 0..tol.max_iter {
        let ew = w.exp();
        let f = w * ew - y;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            return Ok(w);
        }
    }
    let resid = (w * w.exp() - y).abs();
    if resid <= tol.abs_tol * y.max(1.0) {
        Ok(w)
    } else {
        Err(Error::domain(format!("lambert_w({y}) did not converge")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(close(ln_gamma(1.0).unwrap(), 0.0, 1e-14));
        assert!(close(ln_gamma(2.0).unwrap(), 0.0, 1e-14));
        assert!(close(ln_gamma(0.5).unwrap(), PI.sqrt().ln(), 1e-13));
        // Gamma(5) = 4! by the recurrence Gamma(n) = (n-1)!
        assert!(close(ln_gamma(5.0).unwrap(), 24f64.ln(), 1e-13));
        assert!(close(ln_gamma(0.5).unwrap(), 0.572_364_9, 1e-7));
    }

    #[test]
    fn ln_gamma_recurrence() {
        for &x in &[0.01, 0.3, 0.77, 1.5, 3.25, 10.0, 55.5] {
            let lhs = ln_gamma(x + 1.0).unwrap();
            let rhs = x.ln() + ln_gamma(x).unwrap();
            assert!(close(lhs, rhs, 1e-12 * (1.0 + lhs.abs())), "x = {x}");
        }
    }

    #[test]
    fn ln_gamma_rejects_nonpositive() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(ln_gamma(-1.5), Err(Error::Domain(_))));
    }

    #[test]
    fn beta_known_values() {
        assert!(close(beta(1.0, 1.0).unwrap(), 1.0, 1e-14));
        // Gamma(3.5) = 2.5 * 1.5 * 0.5 * sqrt(pi), Gamma(3) = 2.
        assert!(close(beta(0.5, 3.0).unwrap(), 16.0 / 15.0, 1e-13));
        assert!(close(beta(2.0, 3.0).unwrap(), 1.0 / 12.0, 1e-14));
        assert!(beta(0.0, 1.0).is_err());
    }

    #[test]
    fn zeta_closed_forms() {
        assert!(close(zeta(2.0).unwrap(), PI * PI / 6.0, 1e-13));
        assert!(close(zeta(4.0).unwrap(), PI.powi(4) / 90.0, 1e-13));
        assert!(close(zeta(3.0).unwrap(), 1.202_056_903_159_594_3, 1e-13));
        assert!(zeta(1.0).is_err());
        assert!(zeta(0.5).is_err());
    }

    #[test]
    fn exp_integral_order_one_at_one() {
        assert!(close(
            gen_exp_integral(1.0, 1.0).unwrap(),
            0.219_383_934_395_520_3,
            1e-13
        ));
    }

    #[test]
    fn exp_integral_rejects_bad_args() {
        assert!(gen_exp_integral(1.0, 0.0).is_err());
        assert!(gen_exp_integral(1.0, -2.0).is_err());
        assert!(gen_exp_integral(0.5, 1.0).is_err());
    }

    #[test]
    fn exp_integral_inverse_round_trips() {
        let x = gen_exp_integral_inverse(1.0, gen_exp_integral(1.0, 1.0).unwrap()).unwrap();
        assert!(close(x, 1.0, 1e-8));
        let x = gen_exp_integral_inverse(2.0, gen_exp_integral(2.0, 3.7).unwrap()).unwrap();
        assert!(close(x, 3.7, 1e-8));
    }

    #[test]
    fn exp_integral_inverse_out_of_range() {
        // E_2 is bounded by 1/(2-1) = 1.
        assert!(gen_exp_integral_inverse(2.0, 1.0).is_err());
        assert!(gen_exp_integral_inverse(2.0, 0.0).is_err());
        assert!(gen_exp_integral_inverse(1.0, -0.1).is_err());
        // Near the supremum the inverse still resolves.
        let x = gen_exp_integral_inverse(2.0, 0.99).unwrap();
        assert!(close(gen_exp_integral(2.0, x).unwrap(), 0.99, 1e-10));
    }

    #[test]
    fn lambert_w_values() {
        assert_eq!(lambert_w(0.0).unwrap(), 0.0);
        assert!(close(lambert_w(std::f64::consts::E).unwrap(), 1.0, 1e-14));
        let w6 = lambert_w(6.0).unwrap();
        assert!(close((w6 / 6.0).exp(), 1.2696, 1e-4));
        assert!(lambert_w(-0.1).is_err());
    }

    #[test]
    fn tolerance_validation() {
        assert!(SpecFunTolerance::new(0.0, 10).is_err());
        assert!(SpecFunTolerance::new(1e-8, 0).is_err());
        assert!(SpecFunTolerance::new(1e-8, 5).is_ok());
    }
}
