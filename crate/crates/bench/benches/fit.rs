use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use grmlr_core::eval::loocv;
use grmlr_core::{fit, synthesize, GrmlrConfig, SynthParams};

fn bench_fit(c: &mut Criterion) {
    let ds = synthesize(&SynthParams {
        noise: 0.5,
        ..SynthParams::default()
    })
    .unwrap();
    let config = GrmlrConfig::default();
    let no_graph = GrmlrConfig {
        lambda_g: 0.0,
        ..config.clone()
    };

    let mut group = c.benchmark_group("13x26");
    group.bench_function("fit", |b| b.iter(|| fit(black_box(&ds), &config).unwrap()));
    group.bench_function("fit_no_graph", |b| b.iter(|| fit(black_box(&ds), &no_graph).unwrap()));
    group.sample_size(20);
    group.bench_function("loocv", |b| b.iter(|| loocv(black_box(&ds), &config).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_fit);
criterion_main!(benches);
