//! Classical worst-case rates for the Zipf (`alpha = 1`) problem, for
//! comparison with the exact dynamics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::powerlaw::harmonic_partial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BaselineKind {
    Sublinear,
    Linear,
    AdagradBound,
    AdamKappa,
    SdGradOneNorm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineCurve {
    pub kind: BaselineKind,
    pub d: usize,
    pub points: Vec<(f64, f64)>,
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::domain(format!("baselines need d >= 2, got {d}")));
    }
    Ok(())
}

/// `(r_sub, r_lin) = (2d/(H_{d,1} t), (1 - 1/d)^t)`; `r_sub` is infinite
/// at `t = 0`.
pub fn worst_case_rates(d: usize, t: f64) -> Result<(f64, f64)> {
    check_d(d)?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("t must be >= 0, got {t}")));
    }
    let h = harmonic_partial(d as u64, 1.0)?;
    let df = d as f64;
    let r_sub = if t == 0.0 {
        f64::INFINITY
    } else {
        2.0 * df / (h * t)
    };
    let r_lin = (t * (-1.0 / df).ln_1p()).exp();
    Ok((r_sub, r_lin))
}

/// `d H_{d,1} / (T H_{d,2})`.
pub fn adagrad_bound(d: usize, horizon: f64) -> Result<f64> {
    check_d(d)?;
    if !(horizon > 0.0) {
        return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
    }
    let h1 = harmonic_partial(d as u64, 1.0)?;
    let h2 = harmonic_partial(d as u64, 2.0)?;
    Ok(d as f64 * h1 / (horizon * h2))
}

/// Leading-order form `6 d ln d / (pi^2 T)` of [`adagrad_bound`].
pub fn adagrad_bound_asymptote(d: usize, horizon: f64) -> f64 {
    let df = d as f64;
    6.0 * df * df.ln() / (std::f64::consts::PI.powi(2) * horizon)
}

/// `min(d^2 + 1, d)`, which is always `d`.
pub fn adam_kappa(d: u64) -> u64 {
    d.saturating_mul(d).saturating_add(1).min(d)
}

/// Gradient 1-norm of sign descent at `t = tau sqrt(d)/2`, relative to the
/// initial one: `(sum_{k <= phi} (1/k - 1/phi) + (d - floor(phi))/(2 t phi)) / H_{d,1}`.
pub fn sd_grad_one_norm_ratio(d: usize, tau: f64, phi: f64) -> Result<f64> {
    check_d(d)?;
    if !(tau > 2.0) {
        return Err(Error::domain(format!("tau must be > 2, got {tau}")));
    }
    if !(phi > 1.0 && phi < 2.0) {
        return Err(Error::domain(format!("phi must lie in (1, 2), got {phi}")));
    }
    let df = d as f64;
    let t = 0.5 * tau * df.sqrt();
    let n = phi.floor() as usize;
    let decreasing: f64 = (1..=n).map(|k| 1.0 / k as f64 - 1.0 / phi).sum();
    let oscillating = (d - n) as f64 / (2.0 * t * phi);
    Ok((decreasing + oscillating) / harmonic_partial(d as u64, 1.0)?)
}
