//! Power-law fits `y = c x^beta` by least squares in log space.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub coefficient_c: f64,
    pub exponent_beta: f64,
    /// Root-mean-square residual of `ln y`.
    pub residual_rms: f64,
    pub n_points: usize,
}

impl ScalingFit {
    /// Fits `ln y = ln c + beta ln x`. Needs two distinct positive `x`
    /// values and positive `y`.
    pub fn fit(xs: &[f64], ys: &[f64]) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::domain(format!(
                "fit needs equal lengths, got {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 {
            return Err(Error::domain("fit needs at least two points"));
        }
        if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::domain("fit needs positive finite data"));
        }
        let n = xs.len() as f64;
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let mx = lx.iter().sum::<f64>() / n;
        let my = ly.iter().sum::<f64>() / n;
        let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::domain("fit needs at least two distinct x values"));
        }
        let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let beta = sxy / sxx;
        let intercept = my - beta * mx;
        let ss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| (y - intercept - beta * x).powi(2))
            .sum();
        Ok(Self {
            coefficient_c: intercept.exp(),
            exponent_beta: beta,
            residual_rms: (ss / n).sqrt(),
            n_points: xs.len(),
        })
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.coefficient_c * x.powf(self.exponent_beta)
    }
}
