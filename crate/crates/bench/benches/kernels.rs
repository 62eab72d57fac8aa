use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use powerscale::corpus::{self, BigramStats};
use powerscale::gd;
use powerscale::sd::{self, SdLossModel};
use powerscale::PowerLawSpec;
use powerscale_bench::zipf_tokens;

fn gd_loss(c: &mut Criterion) {
    let mut g = c.benchmark_group("gd_relative_loss");
    for d in [10_000usize, 1_000_000] {
        let spec = PowerLawSpec::new(d, 1.0).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(d), &spec, |b, s| {
            b.iter(|| gd::gd_relative_loss(s, black_box(500)))
        });
    }
    g.finish();
    c.bench_function("gd_integral_form/1e5", |b| {
        b.iter(|| gd::gd_integral_form(100_000, 1.0, black_box(300.0)))
    });
}

fn sd_loss(c: &mut Criterion) {
    let spec = PowerLawSpec::new(100_000, 1.0).unwrap();
    let model = SdLossModel::new(&spec);
    c.bench_function("sd_loss_model/loss", |b| {
        b.iter(|| model.loss(black_box(2000.0), black_box(40.0)))
    });
    c.bench_function("sd_loss_model/grid_search", |b| {
        b.iter(|| model.grid_search(black_box(2000.0)))
    });
    c.bench_function("sd_exact_distance", |b| {
        b.iter(|| sd::sd_exact_distance(black_box(0.731), black_box(1e-3), black_box(10_001)))
    });
}

fn corpus_kernels(c: &mut Criterion) {
    let tokens = zipf_tokens(1 << 20, 5_000, 1.0);
    c.bench_function("count_bigrams/1M", |b| {
        b.iter(|| corpus::count_bigrams(black_box(&tokens), 5_000))
    });
    let stats = corpus::stats_from_counts(&corpus::count_bigrams(&tokens, 5_000).unwrap()).unwrap();
    c.bench_function("real_sd_loss/corpus", |b| {
        b.iter(|| corpus::real_sd_loss(&stats, black_box(1e-4), 200))
    });
    let small = BigramStats::from_power_law(&PowerLawSpec::new(300, 1.0).unwrap()).unwrap();
    c.bench_function("optimize_sd_step/d300", |b| {
        b.iter(|| corpus::optimize_sd_step(&small, black_box(40)))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = gd_loss, sd_loss, corpus_kernels
}
criterion_main!(benches);
