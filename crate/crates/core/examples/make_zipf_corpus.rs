//! Writes an i.i.d. Zipf token stream as little-endian u32 ids.
//!
//! Usage: make_zipf_corpus OUT [VOCAB] [TOKENS] [ALPHA] [SEED]

use std::path::PathBuf;

use powerscale::corpus::write_tokens_binary;
use powerscale::PowerLawSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let out = PathBuf::from(args.first().ok_or("missing output path")?);
    let vocab: usize = args.get(1).map_or(Ok(1000), |s| s.parse())?;
    let n: usize = args.get(2).map_or(Ok(100_000), |s| s.parse())?;
    let alpha: f64 = args.get(3).map_or(Ok(1.0), |s| s.parse())?;
    let seed: u64 = args.get(4).map_or(Ok(0), |s| s.parse())?;

    let spec = PowerLawSpec::new(vocab, alpha)?;
    let mut cdf = Vec::with_capacity(vocab);
    let mut acc = 0.0;
    for p in spec.frequencies() {
        acc += p;
        cdf.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tokens: Vec<u32> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen::<f64>() * acc;
            cdf.partition_point(|&c| c <= u).min(vocab - 1) as u32
        })
        .collect();
    write_tokens_binary(&out, &tokens)?;
    eprintln!("wrote {n} tokens over {vocab} ids to {}", out.display());
    Ok(())
}
