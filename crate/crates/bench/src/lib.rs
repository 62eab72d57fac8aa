//! Fixtures shared by the benchmarks in `benches/`.

use powerscale::PowerLawSpec;

/// A deterministic Zipf-like token stream: a Weyl sequence pushed through
/// the inverse CDF of the power-law unigram distribution.
pub fn zipf_tokens(n: usize, vocab: usize, alpha: f64) -> Vec<u32> {
    let spec = PowerLawSpec::new(vocab, alpha).expect("valid spec");
    let mut cdf: Vec<f64> = spec
        .frequencies()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    *cdf.last_mut().unwrap() = 1.0;
    let step = (5f64.sqrt() - 1.0) / 2.0;
    (0..n)
        .map(|i| {
            let u = (i as f64 * step).fract();
            cdf.partition_point(|&c| c < u) as u32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_are_in_range_and_skewed() {
        let t = zipf_tokens(10_000, 100, 1.0);
        assert!(t.iter().all(|&x| x < 100));
        let zeros = t.iter().filter(|&&x| x == 0).count();
        let last = t.iter().filter(|&&x| x == 99).count();
        assert!(zeros > 10 * last);
    }
}
