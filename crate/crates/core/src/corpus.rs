//! Bigram statistics from token-id streams, and closed-form GD/SD losses on
//! them.
//!
//! Consecutive tokens form `(context, next)` pairs. The reserved id
//! [`DOC_BOUNDARY`] separates documents; no pair crosses it.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gd::{Algorithm, RateCurve, TimeSemantics};
use crate::optim;
use crate::powerlaw::{PowerLawSpec, ORACLE_MAX_D};
use crate::sd::sd_exact_distance;

pub const DOC_BOUNDARY: u32 = u32::MAX;

const COUNTS_MAGIC: &[u8; 4] = b"BGC1";
const SHARD_LEN: usize = 1 << 20;

/// Raw unigram and bigram counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BigramCounts {
    pub vocab_size: u32,
    pub unigram: HashMap<u32, u64>,
    /// Keyed by `(context, next)`.
    pub bigram: HashMap<(u32, u32), u64>,
    pub total_tokens: u64,
}

impl BigramCounts {
    pub fn new(vocab_size: u32) -> Self {
        Self {
            vocab_size,
            ..Self::default()
        }
    }

    /// Adds another set of counts over the same vocabulary.
    pub fn merge(&mut self, other: BigramCounts) {
        for (k, v) in other.unigram {
            *self.unigram.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.bigram {
            *self.bigram.entry(k).or_insert(0) += v;
        }
        self.total_tokens += other.total_tokens;
    }

    pub fn n_bigrams(&self) -> u64 {
        self.bigram.values().sum()
    }

    /// Bigram entries sorted by `(context, next)`.
    pub fn sorted_bigrams(&self) -> Vec<((u32, u32), u64)> {
        let mut v: Vec<_> = self.bigram.iter().map(|(&k, &c)| (k, c)).collect();
        v.sort_unstable_by_key(|e| e.0);
        v
    }

    /// Unigram entries sorted by token id.
    pub fn sorted_unigrams(&self) -> Vec<(u32, u64)> {
        let mut v: Vec<_> = self.unigram.iter().map(|(&k, &c)| (k, c)).collect();
        v.sort_unstable();
        v
    }
}

/// Counts unigrams and consecutive pairs, in parallel over shards of the
/// stream. Each shard owns the pairs that start inside it.
pub fn count_bigrams(tokens: &[u32], vocab_size: u32) -> Result<BigramCounts> {
    if vocab_size == 0 || vocab_size == DOC_BOUNDARY {
        return Err(Error::config(format!(
            "invalid vocabulary size {vocab_size}"
        )));
    }
    if let Some(pos) = tokens
        .iter()
        .position(|&t| t != DOC_BOUNDARY && t >= vocab_size)
    {
        return Err(Error::format(format!(
            "token id {} at position {pos} is >= vocabulary size {vocab_size}",
            tokens[pos]
        )));
    }
    let n_shards = tokens.len().div_ceil(SHARD_LEN);
    let counts = (0..n_shards)
        .into_par_iter()
        .map(|s| {
            let start = s * SHARD_LEN;
            let end = (start + SHARD_LEN).min(tokens.len());
            let mut c = BigramCounts::new(vocab_size);
            for i in start..end {
                let x = tokens[i];
                if x == DOC_BOUNDARY {
                    continue;
                }
                *c.unigram.entry(x).or_insert(0) += 1;
                c.total_tokens += 1;
                if let Some(&y) = tokens.get(i + 1) {
                    if y != DOC_BOUNDARY {
                        *c.bigram.entry((x, y)).or_insert(0) += 1;
                    }
                }
            }
            c
        })
        .reduce(
            || BigramCounts::new(vocab_size),
            |mut a, b| {
                a.merge(b);
                a
            },
        );
    if counts.total_tokens == 0 {
        return Err(Error::format("token stream contains no tokens"));
    }
    Ok(counts)
}

/// Reads a token stream. Files ending in `.txt` hold one decimal id per
/// line with blank lines between documents; anything else is read as
/// little-endian `u32` ids.
pub fn read_tokens(path: &Path) -> Result<Vec<u32>> {
    if path.extension().is_some_and(|e| e == "txt") {
        read_tokens_text(BufReader::new(File::open(path)?))
    } else {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        decode_tokens_binary(&bytes)
    }
}

pub fn decode_tokens_binary(bytes: &[u8]) -> Result<Vec<u32>> {
    if bytes.len() % 4 != 0 {
        return Err(Error::format(format!(
            "token file length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect())
}

pub fn read_tokens_text<R: BufRead>(reader: R) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            if out.last() != Some(&DOC_BOUNDARY) {
                out.push(DOC_BOUNDARY);
            }
            continue;
        }
        let id: u32 = s
            .parse()
            .map_err(|_| Error::format(format!("line {}: invalid token id {s:?}", lineno + 1)))?;
        if id == DOC_BOUNDARY {
            return Err(Error::format(format!(
                "line {}: id {id} is reserved for document boundaries",
                lineno + 1
            )));
        }
        out.push(id);
    }
    Ok(out)
}

pub fn write_tokens_binary(path: &Path, tokens: &[u32]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in tokens {
        w.write_all(&t.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the counts file: a 16-byte header, `(context, next, count)`
/// records sorted by key, then a separator record
/// `(u32::MAX, u32::MAX, n)` followed by `n` `(token, count)` unigram records.
pub fn write_counts(path: &Path, counts: &BigramCounts) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(COUNTS_MAGIC)?;
    w.write_all(&counts.vocab_size.to_le_bytes())?;
    w.write_all(&0u64.to_le_bytes())?;
    for ((x, y), c) in counts.sorted_bigrams() {
        w.write_all(&x.to_le_bytes())?;
        w.write_all(&y.to_le_bytes())?;
        w.write_all(&c.to_le_bytes())?;
    }
    let unigrams = counts.sorted_unigrams();
    w.write_all(&DOC_BOUNDARY.to_le_bytes())?;
    w.write_all(&DOC_BOUNDARY.to_le_bytes())?;
    w.write_all(&(unigrams.len() as u64).to_le_bytes())?;
    for (t, c) in unigrams {
        w.write_all(&t.to_le_bytes())?;
        w.write_all(&c.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_counts(path: &Path) -> Result<BigramCounts> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    decode_counts(&bytes)
}

fn le_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes(b[..4].try_into().expect("4 bytes"))
}

fn le_u64(b: &[u8]) -> u64 {
    u64::from_le_bytes(b[..8].try_into().expect("8 bytes"))
}

/// Parses a counts file. Without a unigram section each token's count is
/// the larger of its context and next-token totals.
pub fn decode_counts(bytes: &[u8]) -> Result<BigramCounts> {
    if bytes.len() < 16 || &bytes[..4] != COUNTS_MAGIC {
        return Err(Error::format("counts file has no BGC1 header"));
    }
    let vocab_size = le_u32(&bytes[4..]);
    let mut counts = BigramCounts::new(vocab_size);
    let check = |id: u32, what: &str, offset: usize| -> Result<()> {
        if id >= vocab_size {
            return Err(Error::format(format!(
                "{what} id {id} at byte {offset} is >= vocabulary size {vocab_size}"
            )));
        }
        Ok(())
    };

    let mut pos = 16;
    let mut unigram_section = None;
    while pos < bytes.len() {
        if bytes.len() - pos < 16 {
            return Err(Error::format(format!(
                "truncated bigram record at byte {pos}"
            )));
        }
        let x = le_u32(&bytes[pos..]);
        let y = le_u32(&bytes[pos + 4..]);
        let c = le_u64(&bytes[pos + 8..]);
        if x == DOC_BOUNDARY && y == DOC_BOUNDARY {
            unigram_section = Some((pos + 16, c));
            break;
        }
        check(x, "context", pos)?;
        check(y, "next", pos)?;
        if c > 0 {
            *counts.bigram.entry((x, y)).or_insert(0) += c;
        }
        pos += 16;
    }

    match unigram_section {
        Some((start, n)) => {
            let expected = usize::try_from(n)
                .ok()
                .and_then(|n| n.checked_mul(12))
                .and_then(|len| len.checked_add(start))
                .ok_or_else(|| Error::format("unigram section length overflows"))?;
            if expected != bytes.len() {
                return Err(Error::format(format!(
                    "unigram section declares {n} records but file has {} trailing bytes",
                    bytes.len() - start
                )));
            }
            for r in bytes[start..].chunks_exact(12) {
                let t = le_u32(r);
                check(t, "unigram", start)?;
                let c = le_u64(&r[4..]);
                if c > 0 {
                    *counts.unigram.entry(t).or_insert(0) += c;
                }
            }
        }
        None => {
            let mut as_context: HashMap<u32, u64> = HashMap::new();
            let mut as_next: HashMap<u32, u64> = HashMap::new();
            for (&(x, y), &c) in &counts.bigram {
                *as_context.entry(x).or_insert(0) += c;
                *as_next.entry(y).or_insert(0) += c;
            }
            for (t, c) in as_context.iter() {
                counts.unigram.insert(*t, *c);
            }
            for (t, c) in as_next {
                let e = counts.unigram.entry(t).or_insert(0);
                *e = (*e).max(c);
            }
        }
    }
    counts.total_tokens = counts.unigram.values().sum();
    Ok(counts)
}

/// Normalized, rank-indexed statistics. Index `0` is the most frequent
/// token (rank 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BigramStats {
    pub pi: Vec<f64>,
    /// Per context, `(next rank, conditional frequency)` sorted by
    /// descending frequency.
    pub rows: Vec<Vec<(u32, f64)>>,
    /// `s_j = sum_k pi_{k|j}^2`.
    pub row_power_sums: Vec<f64>,
    pub token_of_rank: Vec<u32>,
}

impl BigramStats {
    pub fn d(&self) -> usize {
        self.pi.len()
    }

    pub fn rank_of_token(&self) -> HashMap<u32, usize> {
        self.token_of_rank
            .iter()
            .enumerate()
            .map(|(r, &t)| (t, r))
            .collect()
    }

    pub fn n_entries(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// `sum_j pi_j s_j`, the initial loss up to a constant factor.
    pub fn initial_loss(&self) -> f64 {
        self.pi
            .iter()
            .zip(&self.row_power_sums)
            .map(|(p, s)| p * s)
            .sum()
    }

    /// Statistics of the power-law model: `pi_k = 1/(z k^alpha)` and every
    /// row equal to `pi`.
    pub fn from_power_law(spec: &PowerLawSpec) -> Result<Self> {
        let d = spec.d();
        if d > ORACLE_MAX_D {
            return Err(Error::Size {
                what: "dense power-law statistics",
                got: d,
                cap: ORACLE_MAX_D,
            });
        }
        let pi = spec.frequencies();
        let row: Vec<(u32, f64)> = pi.iter().enumerate().map(|(k, &p)| (k as u32, p)).collect();
        let s: f64 = pi.iter().map(|p| p * p).sum();
        Ok(Self {
            rows: vec![row; d],
            row_power_sums: vec![s; d],
            token_of_rank: (0..d as u32).collect(),
            pi,
        })
    }
}

/// Ranks tokens by descending count (ties by id), drops zero counts and
/// normalizes rows by their bigram totals.
pub fn stats_from_counts(counts: &BigramCounts) -> Result<BigramStats> {
    let mut unigrams: Vec<(u32, u64)> = counts
        .unigram
        .iter()
        .filter(|e| *e.1 > 0)
        .map(|(&t, &c)| (t, c))
        .collect();
    let total: u64 = unigrams.iter().map(|e| e.1).sum();
    if total == 0 {
        return Err(Error::domain("counts contain no tokens"));
    }
    unigrams.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let rank: HashMap<u32, u32> = unigrams
        .iter()
        .enumerate()
        .map(|(r, &(t, _))| (t, r as u32))
        .collect();
    let d = unigrams.len();

    let mut raw: Vec<Vec<(u32, u64)>> = vec![Vec::new(); d];
    for (&(x, y), &c) in &counts.bigram {
        if c == 0 {
            continue;
        }
        let (Some(&rx), Some(&ry)) = (rank.get(&x), rank.get(&y)) else {
            return Err(Error::format(format!(
                "bigram ({x}, {y}) involves a token without unigram count"
            )));
        };
        raw[rx as usize].push((ry, c));
    }

    let rows: Vec<Vec<(u32, f64)>> = raw
        .into_par_iter()
        .map(|mut row| {
            row.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            let n: u64 = row.iter().map(|e| e.1).sum();
            row.into_iter()
                .map(|(k, c)| (k, c as f64 / n as f64))
                .collect()
        })
        .collect();
    let row_power_sums = rows
        .iter()
        .map(|r| r.iter().map(|e| e.1 * e.1).sum())
        .collect();
    Ok(BigramStats {
        pi: unigrams.iter().map(|e| e.1 as f64 / total as f64).collect(),
        rows,
        row_power_sums,
        token_of_rank: unigrams.iter().map(|e| e.0).collect(),
    })
}

/// Relative GD loss with step-size `1/pi_1`,
/// `sum_i pi_i (1 - pi_i/pi_1)^{2t} s_i / sum_i pi_i s_i`.
pub fn real_gd_curve(stats: &BigramStats, times: &[u64]) -> Result<RateCurve> {
    if times.is_empty() {
        return Err(Error::config("time grid is empty"));
    }
    let initial = stats.initial_loss();
    if !(initial > 0.0) {
        return Err(Error::domain("statistics have no bigrams"));
    }
    let pi1 = stats.pi[0];
    let points = times
        .par_iter()
        .map(|&t| {
            if t == 0 {
                return (0.0, 1.0);
            }
            let e = 2.0 * t as f64;
            let loss: f64 = stats
                .pi
                .iter()
                .zip(&stats.row_power_sums)
                .map(|(&p, &s)| {
                    let q = 1.0 - p / pi1;
                    let decay = if q <= 0.0 { 0.0 } else { (e * q.ln()).exp() };
                    p * decay * s
                })
                .sum();
            (t as f64, loss / initial)
        })
        .collect();
    Ok(RateCurve {
        algorithm: Algorithm::Gd,
        d: stats.d(),
        alpha: None,
        points,
        time_semantics: TimeSemantics::RawSteps,
    })
}

/// Relative loss after `horizon` exact sign-descent steps with step-size
/// `eta`, over the nonzero conditional entries. `horizon` must be even.
pub fn real_sd_loss(stats: &BigramStats, eta: f64, horizon: u64) -> Result<f64> {
    if horizon % 2 == 1 {
        return Err(Error::domain(format!(
            "sign-descent losses are reported at even horizons, got {horizon}"
        )));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::domain(format!("step-size must be > 0, got {eta}")));
    }
    if horizon == 0 {
        return Ok(1.0);
    }
    let per_row: Vec<f64> = stats
        .rows
        .par_iter()
        .map(|row| {
            row.iter()
                .map(|&(_, q)| {
                    let x = sd_exact_distance(q, eta, horizon);
                    x * x
                })
                .sum()
        })
        .collect();
    let loss: f64 = stats.pi.iter().zip(&per_row).map(|(p, l)| p * l).sum();
    Ok(loss / stats.initial_loss())
}

/// Best step-size for `horizon` steps of exact sign descent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SdStepOptimum {
    pub eta: f64,
    pub loss: f64,
    pub eta_min: f64,
    pub eta_max: f64,
    /// Set when the coarse grid beat bracketing and the grid refinement
    /// was used instead.
    pub used_fallback: bool,
}

const FALLBACK_GRID: usize = 64;

/// Golden-section search on `ln eta` over `[eta_min/d, d eta_max]`, where
/// `eta_min`, `eta_max` are the smallest and largest conditional
/// frequencies divided by `horizon`.
pub fn optimize_sd_step(stats: &BigramStats, horizon: u64) -> Result<SdStepOptimum> {
    if stats.d() < 2 {
        return Err(Error::domain("step-size search needs at least two tokens"));
    }
    if horizon < 2 || horizon % 2 == 1 {
        return Err(Error::domain(format!(
            "horizon must be even and >= 2, got {horizon}"
        )));
    }
    let (mut qmin, mut qmax) = (f64::INFINITY, 0.0f64);
    for &(_, q) in stats.rows.iter().flatten() {
        qmin = qmin.min(q);
        qmax = qmax.max(q);
    }
    if !(qmax > 0.0) {
        return Err(Error::domain("statistics have no bigrams"));
    }
    let t = horizon as f64;
    let (eta_min, eta_max) = (qmin / t, qmax / t);
    let d = stats.d() as f64;
    let lo = (eta_min / d).ln();
    let hi = (d * eta_max).ln();
    let f = |u: f64| real_sd_loss(stats, u.exp(), horizon).unwrap_or(f64::INFINITY);

    let bracketed = optim::golden_section(f, lo, hi, 1e-4, 0.0, 500)?;

    let step = (hi - lo) / (FALLBACK_GRID - 1) as f64;
    let grid_best = (0..FALLBACK_GRID)
        .map(|i| {
            let u = lo + step * i as f64;
            (u.exp(), f(u))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    let used_fallback = grid_best.1 < bracketed.value * 0.99;

    let mut best = if used_fallback {
        grid_best
    } else {
        (bracketed.x.exp(), bracketed.value)
    };
    let u = best.0.ln();
    let polish = optim::golden_section(f, (u - step).max(lo), (u + step).min(hi), 1e-12, 0.0, 500)?;
    let probes = [eta_min, eta_max, (eta_min * eta_max).sqrt()].map(|eta| {
        (
            eta,
            real_sd_loss(stats, eta, horizon).unwrap_or(f64::INFINITY),
        )
    });
    for cand in [(polish.x.exp(), polish.value), grid_best]
        .into_iter()
        .chain(probes)
    {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    Ok(SdStepOptimum {
        eta: best.0,
        loss: best.1,
        eta_min,
        eta_max,
        used_fallback,
    })
}

/// Number of sign changes of the discrete slope of `real_sd_loss` along a
/// log-spaced `eta` grid. One change means the probe saw a single valley.
pub fn sd_unimodality_probe(
    stats: &BigramStats,
    horizon: u64,
    eta_lo: f64,
    eta_hi: f64,
    n: usize,
) -> Result<usize> {
    if n < 3 || !(eta_lo > 0.0 && eta_hi > eta_lo) {
        return Err(Error::domain("probe needs n >= 3 and 0 < eta_lo < eta_hi"));
    }
    let (a, b) = (eta_lo.ln(), eta_hi.ln());
    let losses = (0..n)
        .map(|i| {
            real_sd_loss(
                stats,
                (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                horizon,
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let signs: Vec<f64> = losses
        .windows(2)
        .map(|w| (w[1] - w[0]).signum())
        .filter(|s| *s != 0.0)
        .collect();
    Ok(signs.windows(2).filter(|w| w[0] != w[1]).count())
}

/// Log-log slopes of frequency against rank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZipfFit {
    pub unigram_exponent: f64,
    /// `(q25, q50, q75)` of per-row slopes; `None` if no row has at least
    /// ten entries.
    pub conditional_quantiles: Option<(f64, f64, f64)>,
    pub rows_used: usize,
}

fn loglog_slope(values: impl Iterator<Item = f64>) -> f64 {
    let (mut n, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, v) in values.enumerate() {
        let x = ((i + 1) as f64).ln();
        let y = v.ln();
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

/// Least-squares slopes of `ln pi` against `ln rank`, for the unigram
/// distribution and for each row with at least ten entries.
pub fn zipf_fit_check(stats: &BigramStats) -> Result<ZipfFit> {
    if stats.d() < 10 {
        return Err(Error::domain(format!(
            "Zipf fit needs d >= 10, got {}",
            stats.d()
        )));
    }
    let unigram_exponent = loglog_slope(stats.pi.iter().copied());
    let mut slopes: Vec<f64> = stats
        .rows
        .iter()
        .filter(|r| r.len() >= 10)
        .map(|r| loglog_slope(r.iter().map(|e| e.1)))
        .collect();
    slopes.sort_by(f64::total_cmp);
    let conditional_quantiles = (!slopes.is_empty()).then(|| {
        (
            quantile(&slopes, 0.25),
            quantile(&slopes, 0.5),
            quantile(&slopes, 0.75),
        )
    });
    Ok(ZipfFit {
        unigram_exponent,
        conditional_quantiles,
        rows_used: slopes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> BigramCounts {
        count_bigrams(&[0, 1, 0, 1, 0], 2).unwrap()
    }

    #[test]
    fn counts_toy_stream() {
        let c = toy();
        assert_eq!(c.unigram[&0], 3);
        assert_eq!(c.unigram[&1], 2);
        assert_eq!(c.bigram[&(0, 1)], 2);
        assert_eq!(c.bigram[&(1, 0)], 2);
        assert_eq!(c.total_tokens, 5);
    }

    #[test]
    fn boundaries_break_pairs() {
        let c = count_bigrams(&[0, DOC_BOUNDARY, 1], 2).unwrap();
        assert!(c.bigram.is_empty());
        assert_eq!(c.total_tokens, 2);
    }

    #[test]
    fn empty_and_out_of_range_streams_fail() {
        assert!(matches!(count_bigrams(&[], 4), Err(Error::Format(_))));
        let err = count_bigrams(&[0, 1, 9], 4).unwrap_err();
        assert!(err.to_string().contains("position 2"), "{err}");
    }

    #[test]
    fn sharded_count_matches_serial() {
        let n = SHARD_LEN * 2 + 17;
        let tokens: Vec<u32> = (0..n)
            .map(|i| {
                if i % 1000 == 999 {
                    DOC_BOUNDARY
                } else {
                    (i * 7 % 13) as u32
                }
            })
            .collect();
        let c = count_bigrams(&tokens, 13).unwrap();
        let mut serial: HashMap<(u32, u32), u64> = HashMap::new();
        for w in tokens.windows(2) {
            if w[0] != DOC_BOUNDARY && w[1] != DOC_BOUNDARY {
                *serial.entry((w[0], w[1])).or_insert(0) += 1;
            }
        }
        assert_eq!(c.bigram, serial);
    }

    #[test]
    fn stats_of_toy_stream() {
        let s = stats_from_counts(&toy()).unwrap();
        assert_eq!(s.pi, vec![0.6, 0.4]);
        assert_eq!(s.rows[0], vec![(1, 1.0)]);
        assert_eq!(s.row_power_sums[0], 1.0);
        assert_eq!(s.token_of_rank, vec![0, 1]);
    }

    #[test]
    fn ties_rank_by_id() {
        let c = count_bigrams(&[5, 2, 5, 2], 6).unwrap();
        let s = stats_from_counts(&c).unwrap();
        assert_eq!(s.token_of_rank, vec![2, 5]);
    }

    #[test]
    fn gd_on_toy_stream() {
        let s = stats_from_counts(&toy()).unwrap();
        let curve = real_gd_curve(&s, &[0, 1]).unwrap();
        assert_eq!(curve.points[0].1, 1.0);
        // Rank-1 row is annihilated; rank-2 keeps (1 - 2/3)^2 of its weight.
        let expected = 0.4 * (1.0f64 / 3.0).powi(2) / (0.6 + 0.4);
        assert!((curve.points[1].1 - expected).abs() < 1e-15);
    }

    #[test]
    fn text_tokens_and_boundaries() {
        let text = "3\n1\n\n\n2\n";
        let t = read_tokens_text(text.as_bytes()).unwrap();
        assert_eq!(t, vec![3, 1, DOC_BOUNDARY, 2]);
        assert!(read_tokens_text("x\n".as_bytes()).is_err());
    }

    #[test]
    fn binary_tokens_reject_odd_length() {
        assert!(decode_tokens_binary(&[0, 0, 0]).is_err());
        assert_eq!(decode_tokens_binary(&[1, 0, 0, 0]).unwrap(), vec![1]);
    }

    #[test]
    fn counts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bgc");
        let c = count_bigrams(&[0, 1, 2, DOC_BOUNDARY, 2, 2, 0], 3).unwrap();
        write_counts(&p, &c).unwrap();
        assert_eq!(read_counts(&p).unwrap(), c);
    }

    #[test]
    fn counts_without_unigram_section() {
        let c = toy();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"BGC1");
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&0u64.to_le_bytes());
        for ((x, y), n) in c.sorted_bigrams() {
            bytes.extend_from_slice(&x.to_le_bytes());
            bytes.extend_from_slice(&y.to_le_bytes());
            bytes.extend_from_slice(&n.to_le_bytes());
        }
        let back = decode_counts(&bytes).unwrap();
        assert_eq!(back.unigram[&0], 2);
        assert_eq!(back.unigram[&1], 2);
        assert_eq!(back.bigram, c.bigram);
    }

    #[test]
    fn corrupt_counts_fail() {
        assert!(decode_counts(b"nope").is_err());
        let mut bytes = b"BGC1".to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&0u64.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3]);
        assert!(decode_counts(&bytes).is_err());
        let mut bad_id = b"BGC1".to_vec();
        bad_id.extend_from_slice(&2u32.to_le_bytes());
        bad_id.extend_from_slice(&0u64.to_le_bytes());
        bad_id.extend_from_slice(&5u32.to_le_bytes());
        bad_id.extend_from_slice(&0u32.to_le_bytes());
        bad_id.extend_from_slice(&1u64.to_le_bytes());
        assert!(decode_counts(&bad_id).is_err());
    }

    #[test]
    fn sd_loss_rejects_odd_horizon() {
        let s = stats_from_counts(&toy()).unwrap();
        assert!(real_sd_loss(&s, 0.1, 3).is_err());
        assert_eq!(real_sd_loss(&s, 0.1, 0).unwrap(), 1.0);
    }

    #[test]
    fn sd_loss_all_oscillating() {
        // eta above every conditional frequency: each entry sits at
        // magnitude q after an even number of steps.
        let spec = PowerLawSpec::new(5, 1.0).unwrap();
        let s = BigramStats::from_power_law(&spec).unwrap();
        let r = real_sd_loss(&s, 2.0, 4).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        let r = real_sd_loss(&s, 1.5, 4).unwrap();
        let num: f64 = s.pi.iter().map(|&q| q * q).sum();
        assert!((r - num / s.row_power_sums[0]).abs() < 1e-15);
    }

    #[test]
    fn zipf_fit_recovers_exponent() {
        for &alpha in &[1.0, 2.0] {
            let spec = PowerLawSpec::new(200, alpha).unwrap();
            let s = BigramStats::from_power_law(&spec).unwrap();
            let fit = zipf_fit_check(&s).unwrap();
            assert!((fit.unigram_exponent + alpha).abs() < 1e-10);
            let (q25, q50, q75) = fit.conditional_quantiles.unwrap();
            assert!((q25 + alpha).abs() < 1e-10 && (q50 - q75).abs() < 1e-12);
        }
    }

    #[test]
    fn zipf_fit_uniform_is_flat() {
        let tokens: Vec<u32> = (0..1000).map(|i| (i % 20) as u32).collect();
        let s = stats_from_counts(&count_bigrams(&tokens, 20).unwrap()).unwrap();
        assert!(zipf_fit_check(&s).unwrap().unigram_exponent.abs() < 1e-12);
    }

    #[test]
    fn optimizer_rejects_degenerate_input() {
        let s = stats_from_counts(&count_bigrams(&[0, 0, 0], 1).unwrap()).unwrap();
        assert!(optimize_sd_step(&s, 2).is_err());
    }
}
