//! Gradient descent with step-size `1/pi_1` on power-law bigram problems.
//!
//! Under the power-law model the normalized loss after `t` steps collapses to
//!
//! ```text
//! r_d(t) = (1/H_{d,alpha}) sum_{k=1}^d k^{-alpha} (1 - k^{-alpha})^{2t}
//! ```
//!
//! which is evaluated in O(d). The approximation bounds work with the exponent
//! `t` rather than `2t`; functions taking a *raw step count* perform the
//! doubling internally, while [`gd_integral_form`] and
//! [`gd_approx_error_bound`] take the exponent directly.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::powerlaw::{FullEigenSystem, PowerLawSpec};
use crate::quad::{self, QuadOptions};
use crate::specfun;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Algorithm {
    #[serde(rename = "gd")]
    Gd,
    #[serde(rename = "sd")]
    Sd,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Gd => "gd",
            Algorithm::Sd => "sd",
        })
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(Algorithm::Gd),
            "sd" => Ok(Algorithm::Sd),
            _ => Err(Error::config(format!("unknown algorithm {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TimeSemantics {
    RawSteps,
    RescaledTau,
}

/// A sampled relative-loss trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCurve {
    pub algorithm: Algorithm,
    pub d: usize,
    /// Power-law exponent of the problem; `None` for empirical statistics.
    pub alpha: Option<f64>,
    /// `(time, relative_loss)` pairs.
    pub points: Vec<(f64, f64)>,
    pub time_semantics: TimeSemantics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GdRegime {
    AlphaBelowOne,
    AlphaEqualsOne,
    AlphaAboveOne,
}

impl GdRegime {
    /// Exact comparison against 1 on the supplied `alpha`.
    pub fn from_alpha(alpha: f64) -> Self {
        if alpha < 1.0 {
            GdRegime::AlphaBelowOne
        } else if alpha == 1.0 {
            GdRegime::AlphaEqualsOne
        } else {
            GdRegime::AlphaAboveOne
        }
    }
}

/// `sum_k k^{-alpha} (1 - k^{-alpha})^exponent / H_{d,alpha}` for a real exponent.
pub(crate) fn gd_relative_loss_exponent(spec: &PowerLawSpec, exponent: f64) -> f64 {
    if exponent == 0.0 {
        return 1.0;
    }
    let alpha = spec.alpha();
    // k = 1 contributes (1 - 1)^exponent = 0.
    let sum: f64 = (2..=spec.d())
        .rev()
        .map(|k| {
            let x = (k as f64).powf(-alpha);
            (exponent * (-x).ln_1p()).exp() * x
        })
        .sum();
    sum / spec.z()
}

/// Exact normalized loss after `t` gradient steps with step-size `1/pi_1`.
pub fn gd_relative_loss(spec: &PowerLawSpec, t: u64) -> f64 {
    gd_relative_loss_exponent(spec, 2.0 * t as f64)
}

/// Normalized loss at the given step counts on the dense system, from the
/// per-eigencomponent closed form `lambda (1 - eta lambda)^{2t} delta(0)^2`.
pub fn gd_full_simulation_at(
    system: &FullEigenSystem,
    eta: f64,
    times: &[u64],
) -> Result<RateCurve> {
    if !(eta >= 0.0) {
        return Err(Error::domain(format!("step-size must be >= 0, got {eta}")));
    }
    let initial = system.initial_loss();
    let points = times
        .iter()
        .map(|&t| {
            let exponent = 2.0 * t as f64;
            let loss: f64 = system
                .entries()
                .map(|(lambda, delta)| {
                    let contraction = (1.0 - eta * lambda).abs();
                    let decay = if t == 0 {
                        1.0
                    } else if contraction == 0.0 {
                        0.0
                    } else {
                        (exponent * contraction.ln()).exp()
                    };
                    lambda * decay * delta * delta
                })
                .sum();
            (t as f64, loss / initial)
        })
        .collect();
    Ok(RateCurve {
        algorithm: Algorithm::Gd,
        d: system.d(),
        alpha: None,
        points,
        time_semantics: TimeSemantics::RawSteps,
    })
}

/// [`gd_full_simulation_at`] on `t = 0..=t_max`.
pub fn gd_full_simulation(system: &FullEigenSystem, eta: f64, t_max: u64) -> Result<RateCurve> {
    let times: Vec<u64> = (0..=t_max).collect();
    gd_full_simulation_at(system, eta, &times)
}

/// `S_d(t) = sum_{k=1}^d k^{-alpha} (1 - k^{-alpha})^t` with exponent `t`.
pub fn gd_sum_form(d: usize, alpha: f64, t: f64) -> f64 {
    (1..=d)
        .rev()
        .map(|k| {
            let x = (k as f64).powf(-alpha);
            x * (1.0 - x).powf(t)
        })
        .sum()
}

/// `I_d(t) = int_1^d k^{-alpha} (1 - k^{-alpha})^t dk` with exponent `t`.
///
/// Integrated in `z = ln k` with a breakpoint at the peak
/// `k_* = (1 + t)^{1/alpha}`, so the integrand stays smooth for large `t`.
pub fn gd_integral_form(d: usize, alpha: f64, t: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain("gd_integral_form requires d >= 2"));
    }
    if !(t >= 0.0) {
        return Err(Error::domain(format!("exponent t must be >= 0, got {t}")));
    }
    let upper = (d as f64).ln();
    let integrand = |z: f64| {
        let base = (1.0 - alpha) * z;
        if t == 0.0 {
            base.exp()
        } else {
            // 1 - e^{-alpha z} = -expm1(-alpha z)
            (base + t * (-(-alpha * z).exp_m1()).ln()).exp()
        }
    };
    let peak = (1.0 + t).ln() / alpha;
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    quad::integrate(integrand, 0.0, upper, &[peak, 0.5 * peak], opts)
}

/// Certificate `delta_d(t)` bounding `|S_d(t) - I_d(t)|` (exponent `t`).
pub fn gd_approx_error_bound(d: usize, alpha: f64, t: f64) -> f64 {
    let d_alpha = (d as f64).powf(alpha);
    if 1.0 + t <= d_alpha {
        let a = 1.0 / (1.0 + t);
        a * (1.0 - a).powf(t)
    } else {
        (1.0 - 1.0 / d_alpha).powf(t) / d_alpha
    }
}

/// Asymptotic rate `r(tau)` as `d -> infinity`.
///
/// - `alpha < 1`: `(1-alpha)/alpha * E_{1/alpha}(tau)`, with `r(0) = 1`.
/// - `alpha = 1`: `1 - tau` for `tau` in `[0, 1]`.
/// - `alpha > 1`: `B(1 - 1/alpha, 1 + 2 tau) / (alpha zeta(alpha))`, where
///   `tau` is the raw step count.
pub fn gd_asymptotic_rate(alpha: f64, tau: f64) -> Result<f64> {
    if !(tau >= 0.0) {
        return Err(Error::domain(format!("tau must be >= 0, got {tau}")));
    }
    match GdRegime::from_alpha(alpha) {
        GdRegime::AlphaBelowOne => {
            if !(alpha > 0.0) {
                return Err(Error::domain(format!("alpha must be > 0, got {alpha}")));
            }
            if tau == 0.0 {
                return Ok(1.0);
            }
            Ok((1.0 - alpha) / alpha * specfun::gen_exp_integral(1.0 / alpha, tau)?)
        }
        GdRegime::AlphaEqualsOne => {
            if tau > 1.0 {
                return Err(Error::domain(format!(
                    "alpha = 1 rate is defined for tau in [0, 1], got {tau}"
                )));
            }
            Ok(1.0 - tau)
        }
        GdRegime::AlphaAboveOne => Ok(
            specfun::beta(1.0 - 1.0 / alpha, 1.0 + 2.0 * tau)? / (alpha * specfun::zeta(alpha)?)
        ),
    }
}

/// `C = Gamma(1 - 1/alpha) / (alpha zeta(alpha))` for `alpha > 1`.
pub fn gd_large_alpha_constant(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0) {
        return Err(Error::domain(format!(
            "constant defined for alpha > 1, got {alpha}"
        )));
    }
    Ok(specfun::gamma(1.0 - 1.0 / alpha)? / (alpha * specfun::zeta(alpha)?))
}

/// Large-`t` equivalent of the `alpha > 1` Beta form,
/// `C (2t)^{-(1 - 1/alpha)}` with `t` the raw step count.
pub fn gd_asymptotic_rate_large_t(alpha: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("t must be > 0, got {t}")));
    }
    Ok(gd_large_alpha_constant(alpha)? * (2.0 * t).powf(-(1.0 - 1.0 / alpha)))
}

/// Raw step count `t_d(tau)` for rescaled time `tau`.
pub fn gd_time_scaling(alpha: f64, d: usize, tau: f64) -> f64 {
    let df = d as f64;
    match GdRegime::from_alpha(alpha) {
        GdRegime::AlphaBelowOne => 0.5 * tau * df.powf(alpha),
        GdRegime::AlphaEqualsOne => 0.5 * df.powf(tau),
        GdRegime::AlphaAboveOne => tau,
    }
}

/// Inverse of [`gd_time_scaling`]: the rescaled time of `t` raw steps.
pub fn gd_rescaled_time(alpha: f64, d: usize, t: f64) -> f64 {
    let df = d as f64;
    match GdRegime::from_alpha(alpha) {
        GdRegime::AlphaBelowOne => 2.0 * t / df.powf(alpha),
        GdRegime::AlphaEqualsOne => {
            if t <= 0.0 {
                0.0
            } else {
                (2.0 * t).ln() / df.ln()
            }
        }
        GdRegime::AlphaAboveOne => t,
    }
}

/// Predicted iteration count to reach relative loss `eps`.
///
/// - `alpha < 1`: `1/2 d^alpha E_{1/alpha}^{-1}(alpha/(1-alpha) eps)` raw steps.
/// - `alpha = 1`: `d^{1-eps}`.
/// - `alpha > 1`: `(C/eps)^{alpha/(alpha-1)}`.
///
/// The `alpha >= 1` branches are the closed-form inversions of the rate in
/// the loss exponent `2t`, so they are twice the raw step count; their
/// scaling in `d` and `eps` is what they are used for.
pub fn gd_time_to_eps(alpha: f64, d: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let df = d as f64;
    match GdRegime::from_alpha(alpha) {
        GdRegime::AlphaBelowOne => {
            let tau = specfun::gen_exp_integral_inverse(1.0 / alpha, alpha / (1.0 - alpha) * eps)?;
            Ok(0.5 * df.powf(alpha) * tau)
        }
        GdRegime::AlphaEqualsOne => Ok(df.powf(1.0 - eps)),
        GdRegime::AlphaAboveOne => {
            let c = gd_large_alpha_constant(alpha)?;
            Ok((c / eps).powf(alpha / (alpha - 1.0)))
        }
    }
}

/// Bounds `tau_-(eps) <= E_{1/alpha}^{-1}(alpha eps/(1-alpha)) <= tau_+(eps)`
/// and the threshold below which they are guaranteed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeBounds {
    pub tau_minus: f64,
    pub tau_plus: f64,
    pub eps_threshold: f64,
}

impl TimeBounds {
    pub fn is_valid_for(&self, eps: f64) -> bool {
        eps <= self.eps_threshold
    }
}

/// Logarithmic bounds on the rescaled time to reach `eps` for `alpha < 1`.
pub fn gd_time_bounds_alpha_lt_1(alpha: f64, eps: f64) -> Result<TimeBounds> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::domain(format!("eps must be > 0, got {eps}")));
    }
    let ratio = (1.0 - alpha) / alpha;
    let y = ratio / eps;
    if y <= 1.0 {
        return Err(Error::domain(format!(
            "bounds need (1-alpha)/(alpha eps) > 1, got {y}"
        )));
    }
    let tau_plus = y.ln();
    let tau_minus = tau_plus - tau_plus.ln() - (1.0 / alpha).ceil();
    let w6 = specfun::lambert_w(6.0)? / 6.0;
    let eps_threshold = (2.0 - (1.0 / alpha).floor()).exp().min(w6) * ratio;
    Ok(TimeBounds {
        tau_minus,
        tau_plus,
        eps_threshold,
    })
}

/// Smallest step count whose relative loss is at most `eps`, by exponential
/// search then bisection on the monotone curve.
pub fn gd_steps_to_eps(spec: &PowerLawSpec, eps: f64) -> Result<u64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if spec.d() < 2 {
        return Ok(1);
    }
    let mut hi: u64 = 1;
    while gd_relative_loss(spec, hi) > eps {
        hi = hi
            .checked_mul(2)
            .ok_or_else(|| Error::domain("step count overflow while searching"))?;
    }
    let mut lo = hi / 2; // r(lo) > eps, or lo == 0
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if gd_relative_loss(spec, mid) <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `gd_relative_loss` sampled at the given raw step counts.
pub fn gd_curve(spec: &PowerLawSpec, times: &[u64]) -> RateCurve {
    RateCurve {
        algorithm: Algorithm::Gd,
        d: spec.d(),
        alpha: Some(spec.alpha()),
        points: times
            .iter()
            .map(|&t| (t as f64, gd_relative_loss(spec, t)))
            .collect(),
        time_semantics: TimeSemantics::RawSteps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerlaw::build_full_problem;

    #[test]
    fn loss_at_zero_is_one() {
        let spec = PowerLawSpec::new(100, 0.8).unwrap();
        assert_eq!(gd_relative_loss(&spec, 0), 1.0);
    }

    #[test]
    fn two_token_one_step() {
        // Iterate x <- x - eta A x on the 2-point system by hand: the first
        // component vanishes, the second keeps (1 - 1/2)^2 of its weight.
        let spec = PowerLawSpec::new(2, 1.0).unwrap();
        assert!((gd_relative_loss(&spec, 1) - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn strictly_decreasing() {
        let spec = PowerLawSpec::new(500, 1.0).unwrap();
        let mut prev = gd_relative_loss(&spec, 1);
        for t in 2..200 {
            let cur = gd_relative_loss(&spec, t);
            assert!(cur < prev, "t = {t}");
            prev = cur;
        }
    }

    #[test]
    fn eta_zero_is_flat() {
        let spec = PowerLawSpec::new(8, 1.0).unwrap();
        let sys = build_full_problem(&spec, None).unwrap();
        let curve = gd_full_simulation(&sys, 0.0, 5).unwrap();
        assert!(curve.points.iter().all(|&(_, r)| (r - 1.0).abs() < 1e-15));
        assert_eq!(curve.points.len(), 6);
    }

    #[test]
    fn integral_form_at_zero_exponent() {
        // int_1^d k^{-alpha} dk
        let v = gd_integral_form(100, 0.5, 0.0).unwrap();
        assert!((v - 2.0 * (10.0 - 1.0)).abs() < 1e-10);
        let v = gd_integral_form(100, 1.0, 0.0).unwrap();
        assert!((v - 100f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn approx_bound_values() {
        assert_eq!(gd_approx_error_bound(100, 1.0, 0.0), 1.0);
        let expected = (1.0 / 11.0) * (10.0f64 / 11.0).powi(10);
        assert!((gd_approx_error_bound(100, 1.0, 10.0) - expected).abs() < 1e-15);
        assert!((gd_approx_error_bound(100, 1.0, 10.0) - 0.03505).abs() < 1e-5);
    }

    #[test]
    fn approx_bound_switches_at_d_alpha() {
        // 1 + t = d^alpha: both branches agree.
        let d = 50;
        let t: f64 = 49.0;
        let small = (1.0 / (1.0 + t)) * (1.0 - 1.0 / (1.0 + t)).powf(t);
        assert!((gd_approx_error_bound(d, 1.0, t) - small).abs() < 1e-15);
        let above = gd_approx_error_bound(d, 1.0, 60.0);
        assert!((above - (1.0 - 1.0 / 50.0f64).powf(60.0) / 50.0).abs() < 1e-15);
    }

    #[test]
    fn asymptotic_rate_regimes() {
        assert_eq!(gd_asymptotic_rate(1.0, 0.5).unwrap(), 0.5);
        assert!(gd_asymptotic_rate(1.0, 1.5).is_err());
        let e2 = specfun::gen_exp_integral(2.0, 1.0).unwrap();
        assert!((gd_asymptotic_rate(0.5, 1.0).unwrap() - e2).abs() < 1e-14);
        assert!((gd_asymptotic_rate(0.5, 1.0).unwrap() - 0.1485).abs() < 1e-4);
        assert_eq!(gd_asymptotic_rate(0.5, 0.0).unwrap(), 1.0);
        let expected = specfun::beta(0.5, 21.0).unwrap() / (2.0 * specfun::zeta(2.0).unwrap());
        assert!((gd_asymptotic_rate(2.0, 10.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.118).abs() < 1e-3);
    }

    #[test]
    fn large_t_equivalent_matches_beta_form() {
        let exact = gd_asymptotic_rate(2.0, 1e6).unwrap();
        let approx = gd_asymptotic_rate_large_t(2.0, 1e6).unwrap();
        assert!((exact / approx - 1.0).abs() < 1e-5);
    }

    #[test]
    fn time_scaling_values() {
        assert!((gd_time_scaling(1.0, 10_000, 0.5) - 50.0).abs() < 1e-9);
        assert!((gd_time_scaling(0.5, 10_000, 2.0) - 100.0).abs() < 1e-9);
        assert_eq!(gd_time_scaling(2.0, 10_000, 7.0), 7.0);
        for &alpha in &[0.5, 1.0, 2.0] {
            let t = gd_time_scaling(alpha, 4096, 0.3);
            assert!((gd_rescaled_time(alpha, 4096, t) - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn time_to_eps_values() {
        assert!((gd_time_to_eps(1.0, 10_000, 0.5).unwrap() - 100.0).abs() < 1e-9);
        assert!((gd_time_to_eps(1.0, 10_000, 1.0 - 1e-12).unwrap() - 1.0).abs() < 1e-9);
        assert!(gd_time_to_eps(1.0, 10_000, 0.0).is_err());
        assert!(gd_time_to_eps(1.0, 10_000, 1.0).is_err());
        let c = gd_large_alpha_constant(2.0).unwrap();
        assert!((gd_time_to_eps(2.0, 10, 0.1).unwrap() - (c / 0.1).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn time_to_eps_alpha_below_one_hits_target() {
        let d = 1_000_000;
        let t = gd_time_to_eps(0.5, d, 0.1).unwrap();
        let spec = PowerLawSpec::new(d, 0.5).unwrap();
        let r = gd_relative_loss(&spec, t.round() as u64);
        assert!((r - 0.1).abs() <= 0.02, "r = {r}");
    }

    #[test]
    fn time_bounds_identity_and_threshold() {
        let b = gd_time_bounds_alpha_lt_1(0.5, 1e-6).unwrap();
        let y: f64 = 1e6;
        assert!(((b.tau_plus - b.tau_minus) - (y.ln().ln() + 2.0)).abs() < 1e-12);
        let w6 = specfun::lambert_w(6.0).unwrap() / 6.0;
        assert!((b.eps_threshold - w6).abs() < 1e-15);
        assert!((b.eps_threshold - 0.2387).abs() < 1e-4);
        assert!(b.is_valid_for(1e-6));
        let tau = specfun::gen_exp_integral_inverse(2.0, 1e-6).unwrap();
        assert!(b.tau_minus <= tau && tau <= b.tau_plus);
    }

    #[test]
    fn steps_to_eps_is_minimal() {
        let spec = PowerLawSpec::new(10_000, 1.0).unwrap();
        let t = gd_steps_to_eps(&spec, 0.5).unwrap();
        assert!(gd_relative_loss(&spec, t) <= 0.5);
        assert!(gd_relative_loss(&spec, t - 1) > 0.5);
    }

    #[test]
    fn regime_from_alpha() {
        assert_eq!(GdRegime::from_alpha(0.999), GdRegime::AlphaBelowOne);
        assert_eq!(GdRegime::from_alpha(1.0), GdRegime::AlphaEqualsOne);
        assert_eq!(GdRegime::from_alpha(1.0 + 1e-12), GdRegime::AlphaAboveOne);
    }
}
