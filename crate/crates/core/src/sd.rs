//! Sign descent on power-law bigram problems.
//!
//! Each coordinate follows `delta <- delta - eta sign(delta)`: it decreases
//! linearly until it would overshoot zero, then oscillates. The simplified
//! model replaces the oscillation by its mean magnitude `eta/2`, which gives
//! the closed-form loss
//!
//! ```text
//! r_d(T, phi) = ( H_{n,2a} - 2 H_{n,a} phi^{-a} + n phi^{-2a}
//!               + (d - n)/(4T^2) phi^{-2a} ) / H_{d,2a},   n = floor(phi)
//! ```
//!
//! with the step-size parameterized as `eta = 1/(z T phi^alpha)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::powerlaw::{FullEigenSystem, HarmonicTable, PowerLawSpec};
use crate::specfun;

/// Number of points in the logarithmic `phi` grid.
pub const PHI_GRID_LEN: usize = 321;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SdMode {
    Exact,
    Simplified,
}

/// Horizon `T`, shape parameter `phi` and the implied step-size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdConfig {
    horizon: f64,
    phi: f64,
    eta: f64,
}

impl SdConfig {
    pub fn new(spec: &PowerLawSpec, horizon: f64, phi: f64) -> Result<Self> {
        check_horizon(horizon)?;
        check_phi(spec.d(), phi)?;
        let eta = 1.0 / (spec.z() * horizon * phi.powf(spec.alpha()));
        Ok(Self { horizon, phi, eta })
    }

    /// Inverts `eta = 1/(z T phi^alpha)`. Fails unless
    /// `pi_d / T <= eta <= pi_1 / T`.
    pub fn from_eta(spec: &PowerLawSpec, horizon: f64, eta: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::domain(format!("step-size must be > 0, got {eta}")));
        }
        let phi = (1.0 / (spec.z() * horizon * eta)).powf(1.0 / spec.alpha());
        // Tolerate round-off at the two ends of the admissible range.
        let d = spec.d() as f64;
        let phi = if (phi - 1.0).abs() < 1e-12 {
            1.0
        } else if (phi - d).abs() < 1e-12 * d {
            d
        } else {
            phi
        };
        check_phi(spec.d(), phi)?;
        Ok(Self { horizon, phi, eta })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::domain(format!(
            "horizon T must be > 0, got {horizon}"
        )));
    }
    Ok(())
}

fn check_phi(d: usize, phi: f64) -> Result<()> {
    if !(phi >= 1.0 && phi <= d as f64) {
        return Err(Error::domain(format!(
            "phi must lie in [1, {d}], got {phi}"
        )));
    }
    Ok(())
}

/// Switch time and residual of one coordinate under exact sign descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdExactState {
    pub delta0: f64,
    pub eta: f64,
    pub t_switch: u64,
    pub c: f64,
}

impl SdExactState {
    /// `delta0` is taken by magnitude.
    pub fn new(delta0: f64, eta: f64) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(Error::domain(format!("step-size must be > 0, got {eta}")));
        }
        if !delta0.is_finite() {
            return Err(Error::domain("initial distance must be finite"));
        }
        let m = delta0.abs();
        let mut ts = (m / eta).floor() as u64;
        // The float quotient can land one off in either direction.
        while ts > 0 && ts as f64 * eta > m {
            ts -= 1;
        }
        while (ts + 1) as f64 * eta <= m {
            ts += 1;
        }
        Ok(Self {
            delta0: m,
            eta,
            t_switch: ts,
            c: m - ts as f64 * eta,
        })
    }
}

/// Signed distance after `t` exact sign-descent steps from `delta0`.
///
/// Returns NaN when `eta <= 0`.
pub fn sd_exact_distance(delta0: f64, eta: f64, t: u64) -> f64 {
    if t == 0 || delta0 == 0.0 {
        return delta0;
    }
    let Ok(state) = SdExactState::new(delta0, eta) else {
        return f64::NAN;
    };
    let s = delta0.signum();
    if t <= state.t_switch {
        return s * (state.delta0 - t as f64 * eta);
    }
    if state.c == 0.0 {
        return 0.0;
    }
    if (t - state.t_switch) % 2 == 1 {
        s * (state.c - eta)
    } else {
        s * state.c
    }
}

/// Magnitude after `t` steps of the simplified dynamics.
pub fn sd_simplified_distance(delta0: f64, eta: f64, t: u64) -> f64 {
    let travelled = t as f64 * eta;
    if travelled <= delta0 {
        delta0 - travelled
    } else {
        0.5 * eta
    }
}

/// Prefix tables for O(1) evaluation of the simplified loss.
#[derive(Debug, Clone)]
pub struct SdLossModel {
    spec: PowerLawSpec,
    h_alpha: HarmonicTable,
    h_2alpha: HarmonicTable,
}

impl SdLossModel {
    pub fn new(spec: &PowerLawSpec) -> Self {
        Self {
            spec: spec.clone(),
            h_alpha: HarmonicTable::new(spec.d(), spec.alpha()),
            h_2alpha: HarmonicTable::new(spec.d(), 2.0 * spec.alpha()),
        }
    }

    pub fn spec(&self) -> &PowerLawSpec {
        &self.spec
    }

    /// Simplified-dynamics loss after `horizon` steps at shape `phi`.
    pub fn loss(&self, horizon: f64, phi: f64) -> Result<f64> {
        check_horizon(horizon)?;
        let d = self.spec.d();
        check_phi(d, phi)?;
        let n = (phi.floor() as usize).min(d);
        let a = self.spec.alpha();
        let p = phi.powf(-a);
        let decreasing = self.h_2alpha.get(n) - 2.0 * self.h_alpha.get(n) * p + n as f64 * p * p;
        let oscillating = (d - n) as f64 / (4.0 * horizon * horizon) * p * p;
        Ok((decreasing.max(0.0) + oscillating) / self.h_2alpha.get(d))
    }

    /// Minimum over the logarithmic grid `phi = d^x`, `x = 10^{-10 + i/32}`.
    /// Ties go to the smaller `phi`.
    pub fn grid_search(&self, horizon: f64) -> Result<(f64, f64)> {
        let mut best = (f64::NAN, f64::INFINITY);
        for phi in phi_grid(self.spec.d()) {
            let loss = self.loss(horizon, phi)?;
            if loss < best.1 {
                best = (phi, loss);
            }
        }
        Ok(best)
    }

    /// Grid search followed by a golden-section refinement in `ln phi`
    /// between the neighbours of the best grid point.
    pub fn optimize_phi(&self, horizon: f64) -> Result<(f64, f64)> {
        let grid = phi_grid(self.spec.d());
        let mut idx = 0;
        let mut best = f64::INFINITY;
        for (i, &phi) in grid.iter().enumerate() {
            let loss = self.loss(horizon, phi)?;
            if loss < best {
                best = loss;
                idx = i;
            }
        }
        let lo = grid[idx.saturating_sub(1)].ln();
        let hi = grid[(idx + 1).min(grid.len() - 1)].ln();
        let d = self.spec.d() as f64;
        let m = crate::optim::golden_section(
            |u| {
                self.loss(horizon, u.exp().clamp(1.0, d))
                    .unwrap_or(f64::INFINITY)
            },
            lo,
            hi,
            0.0,
            1e-10,
            200,
        )?;
        if m.value < best {
            Ok((m.x.exp().clamp(1.0, d), m.value))
        } else {
            Ok((grid[idx], best))
        }
    }
}

/// The `phi` grid `d^x`, `x = 10^{-10 + i/32}` for `i = 0..=320`.
pub fn phi_grid(d: usize) -> Vec<f64> {
    let ln_d = (d as f64).ln();
    (0..PHI_GRID_LEN)
        .map(|i| {
            if i == PHI_GRID_LEN - 1 {
                return d as f64;
            }
            let x = 10f64.powf(-10.0 + i as f64 / 32.0);
            (x * ln_d).exp()
        })
        .collect()
}

/// Simplified-dynamics loss; builds the prefix tables on each call.
pub fn sd_simplified_relative_loss(spec: &PowerLawSpec, horizon: f64, phi: f64) -> Result<f64> {
    SdLossModel::new(spec).loss(horizon, phi)
}

/// Loss of exact sign descent on the power-law problem in O(d).
///
/// All rows share the same multiset of distances, so the row weights cancel.
pub fn sd_exact_relative_loss(spec: &PowerLawSpec, horizon: u64, phi: f64) -> Result<f64> {
    let cfg = SdConfig::new(spec, horizon as f64, phi)?;
    let a = spec.alpha();
    let (mut num, mut den) = (0.0, 0.0);
    for k in (1..=spec.d()).rev() {
        let x = (k as f64).powf(-a) / spec.z();
        let delta = sd_exact_distance(x, cfg.eta(), horizon);
        num += delta * delta;
        den += x * x;
    }
    Ok(num / den)
}

/// Loss after `horizon` steps on the dense system, coordinate by coordinate.
pub fn sd_full_simulation(
    system: &FullEigenSystem,
    eta: f64,
    horizon: u64,
    mode: SdMode,
) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::domain(format!("step-size must be > 0, got {eta}")));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (lambda, delta0) in system.entries() {
        let delta = match mode {
            SdMode::Exact => sd_exact_distance(delta0, eta, horizon),
            SdMode::Simplified => sd_simplified_distance(delta0, eta, horizon),
        };
        num += lambda * delta * delta;
        den += lambda * delta0 * delta0;
    }
    Ok(num / den)
}

/// `(c1, c2) = (1 - 1/(2 alpha), alpha/(1 - alpha))`.
pub fn sd_constants(alpha: f64) -> (f64, f64) {
    (1.0 - 1.0 / (2.0 * alpha), alpha / (1.0 - alpha))
}

/// `(T_d(tau), phi_d(tau))`. `phi` is clipped to `[1, d]`.
pub fn sd_scaling(alpha: f64, d: usize, tau: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be > 0, got {alpha}")));
    }
    let df = d as f64;
    let (t, phi) = if alpha < 0.5 {
        if !(tau > 0.0) {
            return Err(Error::domain(format!("tau must be > 0, got {tau}")));
        }
        let (c1, c2) = sd_constants(alpha);
        let phi = if tau * tau <= (1.0 - c1) / (4.0 * c2) {
            df
        } else {
            df / (c1 + 4.0 * c2 * tau * tau)
        };
        (tau, phi)
    } else if alpha == 0.5 {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::domain(format!(
                "alpha = 1/2 scaling needs tau in [0, 1], got {tau}"
            )));
        }
        (0.5 * df.powf(tau / 2.0), df.powf(1.0 - tau))
    } else {
        if !(tau > 0.0) {
            return Err(Error::domain(format!("tau must be > 0, got {tau}")));
        }
        let base = 1.0 + 1.0 / (tau * tau);
        let phi = if tau * tau < 1.0 / (2f64.powf(alpha) - 1.0) && alpha < 1.0 {
            base
        } else {
            base.powf(1.0 / alpha)
        };
        (0.5 * tau * df.sqrt(), phi)
    };
    Ok((t, phi.clamp(1.0, df)))
}

/// Inverse of the horizon part of [`sd_scaling`]: the rescaled time of a
/// horizon `T`.
pub fn sd_rescaled_time(alpha: f64, d: usize, horizon: f64) -> f64 {
    let df = d as f64;
    if alpha < 0.5 {
        horizon
    } else if alpha == 0.5 {
        2.0 * (2.0 * horizon).ln() / df.ln()
    } else {
        2.0 * horizon / df.sqrt()
    }
}

/// Limit of the simplified loss along [`sd_scaling`] as `d -> infinity`.
pub fn sd_asymptotic_rate(alpha: f64, tau: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be > 0, got {alpha}")));
    }
    if alpha < 0.5 {
        if !(tau > 0.0) {
            return Err(Error::domain(format!("tau must be > 0, got {tau}")));
        }
        let (c1, c2) = sd_constants(alpha);
        if tau * tau <= (1.0 - c1) / (4.0 * c2) {
            Ok(2.0 * alpha * c2)
        } else {
            Ok((c1 + 4.0 * c2 * tau * tau).powf(2.0 * alpha) / (4.0 * tau * tau))
        }
    } else if alpha == 0.5 {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::domain(format!(
                "alpha = 1/2 rate is defined for tau in [0, 1], got {tau}"
            )));
        }
        Ok(1.0 - tau)
    } else {
        if !(tau >= 0.0) {
            return Err(Error::domain(format!("tau must be >= 0, got {tau}")));
        }
        Ok(1.0 / (1.0 + specfun::zeta(2.0 * alpha)? * tau * tau))
    }
}

/// Closed-form optimal `phi` for `alpha > 1/2`, valid once
/// `4 T^2 >= (d - 1)/(2^alpha - 1)`.
pub fn sd_optimal_phi_large_alpha(alpha: f64, d: usize, horizon: f64) -> Result<f64> {
    if !(alpha > 0.5) {
        return Err(Error::domain(format!("alpha must be > 1/2, got {alpha}")));
    }
    check_horizon(horizon)?;
    let threshold = (d as f64 - 1.0) / (2f64.powf(alpha) - 1.0);
    let lhs = 4.0 * horizon * horizon;
    if lhs < threshold * (1.0 - 1e-12) {
        return Err(Error::domain(format!(
            "closed form needs 4T^2 >= {threshold}, got {lhs}"
        )));
    }
    Ok((1.0 + (d as f64 - 1.0) / lhs).powf(1.0 / alpha))
}

/// Predicted horizon to reach loss `eps` along the optimal scaling.
pub fn sd_time_to_eps(alpha: f64, d: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha must be > 0, got {alpha}")));
    }
    let df = d as f64;
    if alpha < 0.5 {
        let (_, c2) = sd_constants(alpha);
        let plateau = 2.0 * alpha * c2;
        if eps >= plateau {
            return Err(Error::domain(format!(
                "eps = {eps} is not below the plateau {plateau}"
            )));
        }
        Ok(
            0.5 * c2.powf(alpha / (1.0 - 2.0 * alpha))
                * (1.0 / eps).powf(1.0 / (2.0 - 4.0 * alpha)),
        )
    } else if alpha == 0.5 {
        Ok(0.5 * df.powf((1.0 - eps) / 2.0))
    } else {
        Ok(0.5 * (df * (1.0 / eps - 1.0) / specfun::zeta(2.0 * alpha)?).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powerlaw::build_full_problem;

    fn iterate(delta0: f64, eta: f64, t: u64) -> f64 {
        let mut x = delta0;
        for _ in 0..t {
            let s = if x > 0.0 {
                1.0
            } else if x < 0.0 {
                -1.0
            } else {
                0.0
            };
            x -= eta * s;
        }
        x
    }

    #[test]
    fn exact_distance_examples() {
        assert_eq!(sd_exact_distance(0.5, 0.3, 0), 0.5);
        assert!((sd_exact_distance(0.5, 0.3, 2) + 0.1).abs() < 1e-15);
        assert_eq!(sd_exact_distance(0.0, 0.3, 7), 0.0);
        let st = SdExactState::new(0.5, 0.3).unwrap();
        assert_eq!(st.t_switch, 1);
        assert!((st.c - 0.2).abs() < 1e-15);
    }

    #[test]
    fn exact_distance_matches_iteration_on_dyadics() {
        let scale = (1u64 << 20) as f64;
        for &(m, n) in &[
            (1000u64, 7u64),
            (524_288, 3),
            (77, 77),
            (5, 1),
            (999_999, 4096),
        ] {
            for &sign in &[1.0, -1.0] {
                let delta0 = sign * m as f64 / scale;
                let eta = n as f64 / scale;
                for t in [0u64, 1, 2, 3, 10, 142, 143, 144, 999, 1000] {
                    assert_eq!(sd_exact_distance(delta0, eta, t), iterate(delta0, eta, t));
                }
            }
        }
    }

    #[test]
    fn exact_distance_exact_multiple_stays_at_zero() {
        assert_eq!(sd_exact_distance(0.75, 0.25, 3), 0.0);
        assert_eq!(sd_exact_distance(0.75, 0.25, 4), 0.0);
        assert_eq!(sd_exact_distance(0.75, 0.25, 5), 0.0);
    }

    #[test]
    fn simplified_distance_examples() {
        assert_eq!(sd_simplified_distance(0.5, 0.3, 0), 0.5);
        assert!((sd_simplified_distance(0.5, 0.3, 2) - 0.15).abs() < 1e-15);
        assert_eq!(sd_simplified_distance(0.6, 0.3, 2), 0.0);
    }

    #[test]
    fn two_token_loss() {
        let spec = PowerLawSpec::new(2, 1.0).unwrap();
        let r = sd_simplified_relative_loss(&spec, 1.0, 2.0).unwrap();
        assert!((r - 0.2).abs() < 1e-15);
    }

    #[test]
    fn phi_one_large_horizon() {
        let spec = PowerLawSpec::new(50, 1.0).unwrap();
        let model = SdLossModel::new(&spec);
        let h2 = crate::powerlaw::harmonic_partial(50, 2.0).unwrap();
        let r = model.loss(1e3, 1.0).unwrap();
        assert!((r - (49.0 / 4e6) / h2).abs() < 1e-15);
    }

    #[test]
    fn simplified_loss_matches_dense_simulation() {
        for &alpha in &[0.25, 0.5, 1.0, 2.0] {
            let spec = PowerLawSpec::new(64, alpha).unwrap();
            let sys = build_full_problem(&spec, None).unwrap();
            let model = SdLossModel::new(&spec);
            for &t in &[1u64, 4, 30] {
                for &phi in &[1.0001, 1.7, 9.3, 63.5, 63.99] {
                    let cfg = SdConfig::new(&spec, t as f64, phi).unwrap();
                    let dense = sd_full_simulation(&sys, cfg.eta(), t, SdMode::Simplified).unwrap();
                    let closed = model.loss(t as f64, phi).unwrap();
                    assert!((dense - closed).abs() < 1e-10, "{alpha} {t} {phi}");
                }
            }
        }
    }

    #[test]
    fn exact_loss_matches_dense_simulation() {
        let spec = PowerLawSpec::new(40, 1.0).unwrap();
        let sys = build_full_problem(&spec, None).unwrap();
        let cfg = SdConfig::new(&spec, 10.0, 3.3).unwrap();
        let dense = sd_full_simulation(&sys, cfg.eta(), 10, SdMode::Exact).unwrap();
        let fast = sd_exact_relative_loss(&spec, 10, 3.3).unwrap();
        assert!((dense - fast).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip_and_range() {
        let spec = PowerLawSpec::new(1000, 0.7).unwrap();
        let cfg = SdConfig::new(&spec, 20.0, 17.0).unwrap();
        let back = SdConfig::from_eta(&spec, 20.0, cfg.eta()).unwrap();
        assert!((back.phi() - 17.0).abs() < 1e-10);
        let lo = SdConfig::new(&spec, 20.0, 1000.0).unwrap().eta();
        let hi = SdConfig::new(&spec, 20.0, 1.0).unwrap().eta();
        assert!((lo - spec.frequency(1000) / 20.0).abs() < 1e-14 * lo);
        assert!((hi - spec.frequency(1) / 20.0).abs() < 1e-14 * hi);
        assert!(SdConfig::new(&spec, 20.0, 0.5).is_err());
        assert!(SdConfig::new(&spec, 20.0, 1001.0).is_err());
        assert!(SdConfig::from_eta(&spec, 20.0, 2.0 * hi).is_err());
    }

    #[test]
    fn scaling_examples() {
        let (t, phi) = sd_scaling(0.5, 10_000, 0.5).unwrap();
        assert!((t - 5.0).abs() < 1e-12 && (phi - 100.0).abs() < 1e-9);
        let (t, phi) = sd_scaling(1.0, 10_000, 2.0).unwrap();
        assert!((t - 100.0).abs() < 1e-12 && (phi - 1.25).abs() < 1e-15);
        let (_, c2) = sd_constants(0.25);
        let c1 = 1.0 - 2.0;
        let (t, phi) = sd_scaling(0.25, 10_000, 3.0).unwrap();
        assert_eq!(t, 3.0);
        assert!((phi - 10_000.0 / (c1 + 4.0 * c2 * 9.0)).abs() < 1e-9);
        assert!(sd_scaling(0.5, 100, 1.5).is_err());
        for &(alpha, tau) in &[(0.25, 3.0), (0.5, 0.4), (1.0, 2.0)] {
            let (t, _) = sd_scaling(alpha, 10_000, tau).unwrap();
            assert!((sd_rescaled_time(alpha, 10_000, t) - tau).abs() < 1e-12);
        }
    }

    #[test]
    fn small_tau_thresholds_agree() {
        for &alpha in &[0.1, 0.25, 0.4] {
            let (c1, c2) = sd_constants(alpha);
            let a: f64 = (1.0 - c1) / (4.0 * c2);
            let b: f64 = 0.5 * ((1.0 - alpha) / (2.0 * alpha * alpha)).sqrt();
            assert!((a.sqrt() - b).abs() < 1e-14);
        }
    }

    #[test]
    fn asymptotic_rate_examples() {
        assert!((sd_asymptotic_rate(0.5, 0.3).unwrap() - 0.7).abs() < 1e-15);
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((sd_asymptotic_rate(1.0, 1.0).unwrap() - 1.0 / (1.0 + z2)).abs() < 1e-12);
        assert!((sd_asymptotic_rate(1.0, 1.0).unwrap() - 0.3781).abs() < 1e-4);
        assert!((sd_asymptotic_rate(0.25, 0.1).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(sd_asymptotic_rate(0.5, 1.2).is_err());
    }

    #[test]
    fn plateau_is_continuous() {
        let alpha = 0.3;
        let (c1, c2) = sd_constants(alpha);
        let tau = ((1.0 - c1) / (4.0 * c2)).sqrt();
        let left = sd_asymptotic_rate(alpha, tau).unwrap();
        let right = sd_asymptotic_rate(alpha, tau * (1.0 + 1e-9)).unwrap();
        assert!((left - right).abs() < 1e-7);
    }

    #[test]
    fn optimal_phi_examples() {
        assert!((sd_optimal_phi_large_alpha(1.0, 101, 5.0).unwrap() - 2.0).abs() < 1e-15);
        assert!(sd_optimal_phi_large_alpha(1.0, 101, 4.9).is_err());
        assert!((sd_optimal_phi_large_alpha(1.5, 1000, 1e9).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_phi_is_local_minimum() {
        let spec = PowerLawSpec::new(10_001, 1.0).unwrap();
        let model = SdLossModel::new(&spec);
        let t = 100.0;
        let phi = sd_optimal_phi_large_alpha(1.0, 10_001, t).unwrap();
        let r = model.loss(t, phi).unwrap();
        assert!(r <= model.loss(t, phi * 1.05).unwrap());
        assert!(r <= model.loss(t, phi * 0.95).unwrap());
    }

    #[test]
    fn grid_has_expected_shape() {
        let g = phi_grid(1000);
        assert_eq!(g.len(), 321);
        assert!((g[0] - 1000f64.powf(1e-10)).abs() < 1e-15);
        assert_eq!(g[320], 1000.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn grid_search_dominates_scaling_candidate() {
        let spec = PowerLawSpec::new(10_000, 1.0).unwrap();
        let model = SdLossModel::new(&spec);
        let (t, phi) = sd_scaling(1.0, 10_000, 2.0).unwrap();
        let (_, best) = model.grid_search(t).unwrap();
        let candidate = model.loss(t, phi).unwrap();
        assert!(best <= candidate * 1.01);
        let (_, refined) = model.optimize_phi(t).unwrap();
        assert!(refined <= best);
    }

    #[test]
    fn time_to_eps_examples() {
        assert!((sd_time_to_eps(0.5, 10_000, 0.5).unwrap() - 5.0).abs() < 1e-12);
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        let expected = 0.5 * (1e4 * 9.0 / z2).sqrt();
        assert!((sd_time_to_eps(1.0, 10_000, 0.1).unwrap() - expected).abs() < 1e-9);
        assert!((expected - 116.95).abs() < 0.01);
        assert!(sd_time_to_eps(1.0, 10_000, 1.0 - 1e-15).unwrap() < 1e-4);
        assert!(sd_time_to_eps(0.25, 10_000, 0.2).is_err());
        assert!(sd_time_to_eps(0.25, 10_000, 0.1).is_ok());
    }

    #[test]
    fn unreachable_floor_at_phi_two() {
        let spec = PowerLawSpec::new(100_000, 1.0).unwrap();
        let model = SdLossModel::new(&spec);
        // Component 1 stalls at 1 - 2^{-alpha} whatever the horizon.
        let floor = 0.25 / crate::powerlaw::harmonic_partial(100_000, 2.0).unwrap();
        for &t in &[1e2, 1e4, 1e6] {
            assert!(model.loss(t, 2.0).unwrap() >= floor * (1.0 - 1e-12));
        }
    }
}
