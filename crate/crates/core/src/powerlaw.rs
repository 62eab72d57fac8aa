//! Synthetic power-law problems: frequencies `pi_k = 1/(z k^alpha)`,
//! generalized harmonic sums, and the dense `d x d` eigen-system of the
//! linear bigram model used as a brute-force oracle at small `d`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun;

/// Largest `d` for which the dense `d x d` system may be built.
pub const ORACLE_MAX_D: usize = 2048;

/// Generalized harmonic partial sum `H_{d,p} = sum_{k=1}^d k^{-p}`.
///
/// Terms are accumulated from `k = d` down to `k = 1` so that the small
/// terms are added first.
pub fn harmonic_partial(d: u64, p: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::domain("harmonic_partial requires d >= 1"));
    }
    Ok((1..=d).rev().map(|k| (k as f64).powf(-p)).sum())
}

/// Leading-order behaviour of `H_{d,p}` as `d` grows: `d^{1-p}/(1-p)` for
/// `p < 1`, `ln d` at `p = 1` and `zeta(p)` for `p > 1`.
pub fn harmonic_asymptote(d: u64, p: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain("harmonic_asymptote requires d >= 2"));
    }
    let df = d as f64;
    Ok(if p < 1.0 {
        df.powf(1.0 - p) / (1.0 - p)
    } else if p == 1.0 {
        df.ln()
    } else {
        specfun::zeta(p)?
    })
}

/// Prefix sums `H_{n,p}` for every `n <= d`, with compensated summation.
///
/// Lookups are O(1) after O(d) setup; entry `0` is the empty sum.
#[derive(Debug, Clone)]
pub struct HarmonicTable {
    p: f64,
    prefix: Vec<f64>,
}

impl HarmonicTable {
    pub fn new(d: usize, p: f64) -> Self {
        let mut prefix = Vec::with_capacity(d + 1);
        prefix.push(0.0);
        // Neumaier summation: ascending k adds terms in decreasing size.
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for k in 1..=d {
            let term = (k as f64).powf(-p);
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
            prefix.push(sum + comp);
        }
        Self { p, prefix }
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn max_n(&self) -> usize {
        self.prefix.len() - 1
    }

    /// `H_{n,p}`; panics if `n` exceeds the table size.
    pub fn get(&self, n: usize) -> f64 {
        self.prefix[n]
    }
}

/// A synthetic problem: vocabulary size `d` and power-law exponent `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerLawSpec {
    d: usize,
    alpha: f64,
    z: f64,
}

impl PowerLawSpec {
    pub fn new(d: usize, alpha: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("vocabulary size d must be >= 1"));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain(format!("alpha must be > 0, got {alpha}")));
        }
        let z = harmonic_partial(d as u64, alpha)?;
        Ok(Self { d, alpha, z })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Normalizer `z = H_{d,alpha}`.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Frequency of the token of rank `k` (1-based).
    pub fn frequency(&self, k: usize) -> f64 {
        debug_assert!((1..=self.d).contains(&k));
        1.0 / (self.z * (k as f64).powf(self.alpha))
    }

    /// `(pi_1, ..., pi_d)`.
    pub fn frequencies(&self) -> Vec<f64> {
        (1..=self.d).map(|k| self.frequency(k)).collect()
    }
}

/// Dense eigen-system of the bigram problem: eigenvalues
/// `lambda_ij = pi_i` and initial distances `delta_ij(0) = pi_{j|i}`.
///
/// Both grids are stored row-major with row index `i` (context) and column
/// index `j` (next token), 0-based.
#[derive(Debug, Clone)]
pub struct FullEigenSystem {
    d: usize,
    lambdas: Vec<f64>,
    deltas0: Vec<f64>,
}

impl FullEigenSystem {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn lambda(&self, i: usize, j: usize) -> f64 {
        self.lambdas[i * self.d + j]
    }

    pub fn delta0(&self, i: usize, j: usize) -> f64 {
        self.deltas0[i * self.d + j]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn deltas0(&self) -> &[f64] {
        &self.deltas0
    }

    pub fn delta0_row(&self, i: usize) -> &[f64] {
        &self.deltas0[i * self.d..(i + 1) * self.d]
    }

    /// `sum_ij lambda_ij delta_ij(0)^2`.
    pub fn initial_loss(&self) -> f64 {
        self.lambdas
            .iter()
            .zip(&self.deltas0)
            .map(|(l, d)| l * d * d)
            .sum()
    }

    /// Iterates `(lambda_ij, delta_ij(0))` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lambdas
            .iter()
            .copied()
            .zip(self.deltas0.iter().copied())
    }
}

/// Builds the dense `d x d` system for `spec`.
///
/// Without permutations, row `i` of `delta_ij(0)` is `(pi_1, ..., pi_d)`.
/// With permutations, `row_permutations[i][j]` (0-based) is the rank of the
/// conditional frequency stored at column `j` of row `i`, so
/// `delta_ij(0) = pi_{perm_i(j) + 1}`.
pub fn build_full_problem(
    spec: &PowerLawSpec,
    row_permutations: Option<&[Vec<usize>]>,
) -> Result<FullEigenSystem> {
    let d = spec.d();
    if d > ORACLE_MAX_D {
        return Err(Error::Size {
            what: "d",
            got: d,
            cap: ORACLE_MAX_D,
        });
    }
    let pi = spec.frequencies();
    if let Some(perms) = row_permutations {
        if perms.len() != d {
            return Err(Error::domain(format!(
                "expected {d} row permutations, got {}",
                perms.len()
            )));
        }
        for (i, perm) in perms.iter().enumerate() {
            check_permutation(perm, d).map_err(|e| Error::domain(format!("row {i}: {e}")))?;
        }
    }

    let mut lambdas = Vec::with_capacity(d * d);
    let mut deltas0 = Vec::with_capacity(d * d);
    for i in 0..d {
        lambdas.extend(std::iter::repeat(pi[i]).take(d));
        match row_permutations {
            Some(perms) => deltas0.extend(perms[i].iter().map(|&r| pi[r])),
            None => deltas0.extend_from_slice(&pi),
        }
    }
    Ok(FullEigenSystem {
        d,
        lambdas,
        deltas0,
    })
}

fn check_permutation(perm: &[usize], d: usize) -> std::result::Result<(), String> {
    if perm.len() != d {
        return Err(format!("length {} != {d}", perm.len()));
    }
    let mut seen = vec![false; d];
    for &r in perm {
        if r >= d || std::mem::replace(&mut seen[r], true) {
            return Err(format!("not a permutation of 0..{d}"));
        }
    }
    Ok(())
}

/// Peak location `k_* = (1 + t)^{1/alpha}` of `k^{-alpha} (1 - k^{-alpha})^t`.
pub fn unimodal_peak(alpha: f64, t: f64) -> f64 {
    (1.0 + t).powf(1.0 / alpha)
}
