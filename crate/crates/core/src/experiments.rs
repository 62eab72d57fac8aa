//! Grid runners that produce the tables behind the loss-curve, step-size,
//! time-to-epsilon, real-data and baseline comparisons.
//!
//! Grid points are evaluated in parallel; rows always come back in grid
//! order.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::baselines;
use crate::corpus::{self, BigramStats};
use crate::error::{Error, Result};
use crate::fit::ScalingFit;
use crate::gd::{self, Algorithm, GdRegime};
use crate::powerlaw::PowerLawSpec;
use crate::sd::{self, SdLossModel};

pub const DEFAULT_ALPHAS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
pub const DEFAULT_DS: [usize; 4] = [1_000, 10_000, 100_000, 1_000_000];
pub const DEFAULT_TAU_POINTS: usize = 33;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub alphas: Vec<f64>,
    pub d_list: Vec<usize>,
    /// `None` selects the default grid for each `alpha`.
    pub tau_grid: Option<Vec<f64>>,
    pub eps_grid: Vec<f64>,
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            alphas: DEFAULT_ALPHAS.to_vec(),
            d_list: DEFAULT_DS.to_vec(),
            tau_grid: None,
            eps_grid: vec![0.25, 0.5, 0.75],
            algorithm: Algorithm::Gd,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.d_list.is_empty() {
            return Err(Error::config("alpha and d lists must be nonempty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::config(format!("alpha must be > 0, got {a}")));
        }
        if let Some(d) = self.d_list.iter().find(|d| **d < 2) {
            return Err(Error::config(format!("d must be >= 2, got {d}")));
        }
        if let Some(g) = &self.tau_grid {
            if g.is_empty() {
                return Err(Error::config("tau grid is empty"));
            }
            if let Some(t) = g.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
                return Err(Error::config(format!("tau must be >= 0, got {t}")));
            }
        }
        if self.eps_grid.is_empty() {
            return Err(Error::config("eps grid is empty"));
        }
        Ok(())
    }

    fn taus(&self, algorithm: Algorithm, alpha: f64) -> Vec<f64> {
        self.tau_grid
            .clone()
            .unwrap_or_else(|| default_tau_grid(algorithm, alpha))
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

/// 33 regime-valid points of rescaled time for each algorithm and `alpha`.
pub fn default_tau_grid(algorithm: Algorithm, alpha: f64) -> Vec<f64> {
    let n = DEFAULT_TAU_POINTS;
    match algorithm {
        Algorithm::Gd => match GdRegime::from_alpha(alpha) {
            GdRegime::AlphaBelowOne => linspace(0.0, 8.0, n),
            GdRegime::AlphaEqualsOne => linspace(0.0, 1.0, n),
            GdRegime::AlphaAboveOne => linspace(0.0, 32.0, n),
        },
        Algorithm::Sd => {
            if alpha < 0.5 {
                linspace(0.125, 4.0, n)
            } else if alpha == 0.5 {
                linspace(0.0, 1.0, n)
            } else {
                linspace(1.0, 5.0, n)
            }
        }
    }
}

/// Fixed-column output rows.
pub trait CsvRecord {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

/// Text of one CSV cell.
pub trait CsvField {
    fn csv(&self) -> String;
}

impl CsvField for f64 {
    /// Shortest round-trip text; scientific outside `[1e-4, 1e15)`.
    fn csv(&self) -> String {
        let a = self.abs();
        if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
            format!("{self:e}")
        } else {
            self.to_string()
        }
    }
}

macro_rules! csv_display {
    ($($ty:ty),+) => {
        $(impl CsvField for $ty {
            fn csv(&self) -> String {
                self.to_string()
            }
        })+
    };
}
csv_display!(u32, u64, usize, Algorithm);

/// Comma-separated, header first, LF line endings.
pub fn write_csv<W: Write, R: CsvRecord>(mut w: W, rows: &[R]) -> Result<()> {
    writeln!(w, "{}", R::HEADER.join(","))?;
    for r in rows {
        writeln!(w, "{}", r.fields().join(","))?;
    }
    w.flush()?;
    Ok(())
}

macro_rules! csv_record {
    ($ty:ty, [$($field:ident),+ $(,)?]) => {
        impl CsvRecord for $ty {
            const HEADER: &'static [&'static str] = &[$(stringify!($field)),+];
            fn fields(&self) -> Vec<String> {
                vec![$(self.$field.csv()),+]
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GdCurveRow {
    pub alpha: f64,
    pub d: usize,
    pub t: u64,
    pub tau: f64,
    pub r_finite: f64,
    pub r_asymptotic: f64,
}
csv_record!(GdCurveRow, [alpha, d, t, tau, r_finite, r_asymptotic]);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdCurveRow {
    pub alpha: f64,
    pub d: usize,
    pub tau: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub phi: f64,
    pub r_finite: f64,
    pub r_asymptotic: f64,
}

impl CsvRecord for SdCurveRow {
    const HEADER: &'static [&'static str] =
        &["alpha", "d", "tau", "T", "phi", "r_finite", "r_asymptotic"];
    fn fields(&self) -> Vec<String> {
        vec![
            self.alpha.csv(),
            self.d.csv(),
            self.tau.csv(),
            self.horizon.csv(),
            self.phi.csv(),
            self.r_finite.csv(),
            self.r_asymptotic.csv(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepsizeRow {
    pub alpha: f64,
    pub d: usize,
    pub tau: f64,
    pub phi_grid_best: f64,
    pub phi_predicted: f64,
    pub ratio: f64,
}
csv_record!(
    StepsizeRow,
    [alpha, d, tau, phi_grid_best, phi_predicted, ratio]
);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeToEpsRow {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub d: usize,
    pub eps: f64,
    pub t_measured: u64,
    pub t_predicted: f64,
    pub r_at_t: f64,
}
csv_record!(
    TimeToEpsRow,
    [algorithm, alpha, d, eps, t_measured, t_predicted, r_at_t]
);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub algorithm: Algorithm,
    pub alpha: f64,
    pub eps: f64,
    pub coefficient_c: f64,
    pub exponent_beta: f64,
    pub residual_rms: f64,
    pub n_points: usize,
    /// Exponent of `d` in the predicted time-to-eps.
    pub beta_theory: f64,
}
csv_record!(
    FitRow,
    [
        algorithm,
        alpha,
        eps,
        coefficient_c,
        exponent_beta,
        residual_rms,
        n_points,
        beta_theory
    ]
);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealDataRow {
    pub d: usize,
    pub algorithm: Algorithm,
    pub t: u64,
    pub r: f64,
    pub tau: f64,
    pub r_asymptotic: f64,
}
csv_record!(RealDataRow, [d, algorithm, t, r, tau, r_asymptotic]);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineRow {
    pub d: usize,
    pub tau: f64,
    pub t: u64,
    pub r_true: f64,
    pub r_sub: f64,
    pub r_lin: f64,
    pub r_adagrad: f64,
}
csv_record!(BaselineRow, [d, tau, t, r_true, r_sub, r_lin, r_adagrad]);

fn alpha_d_pairs(cfg: &ExperimentConfig) -> Vec<(f64, usize)> {
    cfg.alphas
        .iter()
        .flat_map(|&a| cfg.d_list.iter().map(move |&d| (a, d)))
        .collect()
}

/// GD loss at `t = floor(t_d(tau))` against the asymptotic rate at `tau`.
pub fn run_gd_curves(cfg: &ExperimentConfig) -> Result<Vec<GdCurveRow>> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for (alpha, d) in alpha_d_pairs(cfg) {
        let spec = PowerLawSpec::new(d, alpha)?;
        for tau in cfg.taus(Algorithm::Gd, alpha) {
            tasks.push((spec.clone(), tau));
        }
    }
    tasks
        .par_iter()
        .map(|(spec, tau)| {
            let (alpha, d) = (spec.alpha(), spec.d());
            let t = gd::gd_time_scaling(alpha, d, *tau).floor() as u64;
            Ok(GdCurveRow {
                alpha,
                d,
                t,
                tau: *tau,
                r_finite: gd::gd_relative_loss(spec, t),
                r_asymptotic: gd::gd_asymptotic_rate(alpha, *tau)?,
            })
        })
        .collect()
}

/// Simplified SD loss along the `(T_d(tau), phi_d(tau))` scaling.
pub fn run_sd_curves(cfg: &ExperimentConfig) -> Result<Vec<SdCurveRow>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (alpha, d) in alpha_d_pairs(cfg) {
        let model = SdLossModel::new(&PowerLawSpec::new(d, alpha)?);
        let taus = cfg.taus(Algorithm::Sd, alpha);
        let rows = taus
            .par_iter()
            .map(|&tau| {
                let (horizon, phi) = sd::sd_scaling(alpha, d, tau)?;
                Ok(SdCurveRow {
                    alpha,
                    d,
                    tau,
                    horizon,
                    phi,
                    r_finite: model.loss(horizon, phi)?,
                    r_asymptotic: sd::sd_asymptotic_rate(alpha, tau)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(rows);
    }
    Ok(out)
}

/// Grid-search optimal `phi` against the predicted `phi_d(tau)`.
pub fn run_stepsize_convergence(cfg: &ExperimentConfig) -> Result<Vec<StepsizeRow>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (alpha, d) in alpha_d_pairs(cfg) {
        let model = SdLossModel::new(&PowerLawSpec::new(d, alpha)?);
        let rows = cfg
            .taus(Algorithm::Sd, alpha)
            .par_iter()
            .map(|&tau| {
                let (horizon, phi_predicted) = sd::sd_scaling(alpha, d, tau)?;
                let (phi_grid_best, _) = model.grid_search(horizon)?;
                Ok(StepsizeRow {
                    alpha,
                    d,
                    tau,
                    phi_grid_best,
                    phi_predicted,
                    ratio: phi_grid_best / phi_predicted,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(rows);
    }
    Ok(out)
}

/// Smallest even horizon whose phi-optimized simplified loss is at most
/// `eps`, by exponential search then bisection.
pub fn sd_horizon_to_eps(model: &SdLossModel, eps: f64) -> Result<(u64, f64)> {
    const MAX_HALF: u64 = 1 << 40;
    let loss = |half: u64| model.optimize_phi(2.0 * half as f64).map(|r| r.1);
    let mut hi = 1u64;
    let mut at_hi = loss(hi)?;
    while at_hi > eps {
        if hi >= MAX_HALF {
            return Err(Error::domain(format!(
                "loss {eps} not reached within {} steps",
                2 * MAX_HALF
            )));
        }
        hi *= 2;
        at_hi = loss(hi)?;
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = loss(mid)?;
        if v <= eps {
            hi = mid;
            at_hi = v;
        } else {
            lo = mid;
        }
    }
    Ok((2 * hi, at_hi))
}

/// Exponent of `d` in the predicted time-to-eps.
pub fn beta_theory(algorithm: Algorithm, alpha: f64, eps: f64) -> f64 {
    match algorithm {
        Algorithm::Gd => match GdRegime::from_alpha(alpha) {
            GdRegime::AlphaBelowOne => alpha,
            GdRegime::AlphaEqualsOne => 1.0 - eps,
            GdRegime::AlphaAboveOne => 0.0,
        },
        Algorithm::Sd => {
            if alpha < 0.5 {
                0.0
            } else if alpha == 0.5 {
                (1.0 - eps) / 2.0
            } else {
                0.5
            }
        }
    }
}

/// Measured and predicted iterations to reach each `eps`, and the log-log
/// fit of measured iterations against `d` per `(alpha, eps)`.
pub fn run_time_to_eps(cfg: &ExperimentConfig) -> Result<(Vec<TimeToEpsRow>, Vec<FitRow>)> {
    cfg.validate()?;
    if let Some(e) = cfg.eps_grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::config(format!("eps must lie in (0, 1), got {e}")));
    }
    let algorithm = cfg.algorithm;
    let mut tasks = Vec::new();
    for (alpha, d) in alpha_d_pairs(cfg) {
        for &eps in &cfg.eps_grid {
            tasks.push((alpha, d, eps));
        }
    }
    let rows: Vec<TimeToEpsRow> = tasks
        .par_iter()
        .map(|&(alpha, d, eps)| {
            let spec = PowerLawSpec::new(d, alpha)?;
            let (t_measured, t_predicted, r_at_t) = match algorithm {
                Algorithm::Gd => {
                    let t = gd::gd_steps_to_eps(&spec, eps)?;
                    (
                        t,
                        gd::gd_time_to_eps(alpha, d, eps)?,
                        gd::gd_relative_loss(&spec, t),
                    )
                }
                Algorithm::Sd => {
                    let (t, r) = sd_horizon_to_eps(&SdLossModel::new(&spec), eps)?;
                    (t, sd::sd_time_to_eps(alpha, d, eps)?, r)
                }
            };
            Ok(TimeToEpsRow {
                algorithm,
                alpha,
                d,
                eps,
                t_measured,
                t_predicted,
                r_at_t,
            })
        })
        .collect::<Result<_>>()?;

    let mut fits = Vec::new();
    if cfg.d_list.len() >= 2 {
        for &alpha in &cfg.alphas {
            for &eps in &cfg.eps_grid {
                let (xs, ys): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .filter(|r| r.alpha == alpha && r.eps == eps)
                    .map(|r| (r.d as f64, r.t_measured as f64))
                    .unzip();
                let f = ScalingFit::fit(&xs, &ys)?;
                fits.push(FitRow {
                    algorithm,
                    alpha,
                    eps,
                    coefficient_c: f.coefficient_c,
                    exponent_beta: f.exponent_beta,
                    residual_rms: f.residual_rms,
                    n_points: f.n_points,
                    beta_theory: beta_theory(algorithm, alpha, eps),
                });
            }
        }
    }
    Ok((rows, fits))
}

/// Loss curves on corpus statistics, with the power-law prediction for
/// exponent `alpha` at the matching rescaled time.
///
/// GD is sampled at `floor(t_d(tau))`; SD at the even horizon nearest
/// `T_d(tau)` (at least 2) with the step-size optimized per horizon.
pub fn run_real_data(
    stats: &BigramStats,
    alpha: f64,
    taus: &[f64],
    algorithm: Algorithm,
) -> Result<Vec<RealDataRow>> {
    let d = stats.d();
    if d < 2 {
        return Err(Error::domain("statistics need at least two tokens"));
    }
    match algorithm {
        Algorithm::Gd => {
            let times: Vec<u64> = taus
                .iter()
                .map(|&tau| gd::gd_time_scaling(alpha, d, tau).floor() as u64)
                .collect();
            let curve = corpus::real_gd_curve(stats, &times)?;
            curve
                .points
                .iter()
                .zip(taus)
                .map(|(&(t, r), &tau)| {
                    Ok(RealDataRow {
                        d,
                        algorithm,
                        t: t as u64,
                        r,
                        tau,
                        r_asymptotic: gd::gd_asymptotic_rate(alpha, tau)?,
                    })
                })
                .collect()
        }
        Algorithm::Sd => taus
            .iter()
            .map(|&tau| {
                let (horizon, _) = sd::sd_scaling(alpha, d, tau)?;
                let t = (2.0 * (horizon / 2.0).round()).max(2.0) as u64;
                let opt = corpus::optimize_sd_step(stats, t)?;
                let tau_t = sd::sd_rescaled_time(alpha, d, t as f64);
                Ok(RealDataRow {
                    d,
                    algorithm,
                    t,
                    r: opt.loss,
                    tau: tau_t,
                    r_asymptotic: sd::sd_asymptotic_rate(alpha, tau_t)?,
                })
            })
            .collect(),
    }
}

/// Exact GD loss against the worst-case rates at `t = floor(d^tau / 2)`,
/// on the Zipf problem.
pub fn run_baselines(cfg: &ExperimentConfig) -> Result<Vec<BaselineRow>> {
    cfg.validate()?;
    if cfg.alphas.iter().any(|&a| a != 1.0) {
        return Err(Error::config("baselines are defined for alpha = 1 only"));
    }
    let taus = cfg.taus(Algorithm::Gd, 1.0);
    let mut out = Vec::new();
    for &d in &cfg.d_list {
        let spec = PowerLawSpec::new(d, 1.0)?;
        let rows = taus
            .par_iter()
            .map(|&tau| {
                let t = gd::gd_time_scaling(1.0, d, tau).floor() as u64;
                let (r_sub, r_lin) = baselines::worst_case_rates(d, t as f64)?;
                let r_adagrad = if t == 0 {
                    f64::INFINITY
                } else {
                    baselines::adagrad_bound(d, t as f64)?
                };
                Ok(BaselineRow {
                    d,
                    tau,
                    t,
                    r_true: gd::gd_relative_loss(&spec, t),
                    r_sub,
                    r_lin,
                    r_adagrad,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(rows);
    }
    Ok(out)
}
