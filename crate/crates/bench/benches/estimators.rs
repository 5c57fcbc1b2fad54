use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use csl_core::estimators::{ais_log_z, biased_csl, csl, parzen_log_density};
use csl_core::sampler::run_chain;
use csl_core::training::init_rbm;
use csl_core::{AisConfig, BiasedCslConfig, BinaryVector, ChainConfig, RbmModel};
use std::hint::black_box;

fn model() -> RbmModel {
    init_rbm(16, 5, 7, 0.5).unwrap()
}

fn test_points(n: usize) -> Vec<BinaryVector> {
    (0..n as u64).map(|i| BinaryVector::from_index(i.wrapping_mul(2654435761) & 0xffff, 16)).collect()
}

fn gibbs(c: &mut Criterion) {
    let m = model();
    let mut g = c.benchmark_group("run_chain");
    for n in [1_000usize, 10_000] {
        g.throughput(Throughput::Elements(n as u64));
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| run_chain(&m, &ChainConfig::new(n, 1).with_thin(1).with_burn_in(0)).unwrap())
        });
    }
    g.finish();
}

fn csl_eval(c: &mut Criterion) {
    // Wide enough latent space that deduplication does not collapse the sample set.
    let m = init_rbm(16, 20, 7, 0.5).unwrap();
    let xs = test_points(100);
    let mut g = c.benchmark_group("csl");
    for n in [100usize, 1_000] {
        let set = run_chain(&m, &ChainConfig::new(n, 2).with_thin(1)).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &set, |b, set| b.iter(|| csl(&m, set, &xs).unwrap()));
    }
    g.finish();
}

fn biased(c: &mut Criterion) {
    let m = model();
    let x = test_points(1).remove(0);
    let cfg = BiasedCslConfig::default();
    c.bench_function("biased_csl/10x30", |b| b.iter(|| biased_csl(&m, black_box(&x), &cfg).unwrap()));
}

fn ais(c: &mut Criterion) {
    let m = model();
    let cfg = AisConfig { n_temperatures: 100, n_runs: 10, ..AisConfig::default() };
    c.bench_function("ais_log_z/100x10", |b| b.iter(|| ais_log_z(&m, &cfg, None).unwrap()));
}

fn parzen(c: &mut Criterion) {
    let generated: Vec<Vec<f64>> = test_points(1_000).iter().map(|v| v.bits().iter().map(|&b| b as f64).collect()).collect();
    let x = vec![0.5; 16];
    c.bench_function("parzen_log_density/1000", |b| b.iter(|| parzen_log_density(&generated, 0.3, black_box(&x)).unwrap()));
}

criterion_group!(benches, gibbs, csl_eval, biased, ais, parzen);
criterion_main!(benches);
