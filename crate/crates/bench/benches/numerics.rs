use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use outcap_core::numerics::{q_inverse, regularized_lower_gamma};
use outcap_core::snr_models::combiner_quantile;
use outcap_core::{ChannelConfig, DiversityScheme};

fn incomplete_gamma(c: &mut Criterion) {
    let mut g = c.benchmark_group("regularized_lower_gamma");
    for (a, x) in [(2.0, 0.5), (40.0, 30.0), (1000.0, 950.0), (1e4, 9700.0)] {
        g.bench_function(format!("a={a},x={x}"), |b| {
            b.iter(|| regularized_lower_gamma(black_box(a), black_box(x)).unwrap())
        });
    }
    g.finish();
}

fn quantiles(c: &mut Criterion) {
    c.bench_function("q_inverse(1e-3)", |b| {
        b.iter(|| q_inverse(black_box(1e-3)).unwrap())
    });
    let mut g = c.benchmark_group("mrc_quantile");
    for m in [2u64, 100, 10_000] {
        let cfg = ChannelConfig::new(DiversityScheme::Mrc, m, 1, 1.0).unwrap();
        g.bench_function(format!("M={m}"), |b| {
            b.iter(|| combiner_quantile(black_box(&cfg), black_box(1e-3)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, incomplete_gamma, quantiles);
criterion_main!(benches);
