use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use vanet_core::certs::{validate_batch, validate_batch_sequential, CertKind, Issuer};
use vanet_core::crypto::{CryptoProvider, DigestBackend};
use vanet_core::sim::SimConfig;
use vanet_core::sweep::{run_many, run_many_sequential, seed_sweep};

fn scenario_sweep(c: &mut Criterion) {
    let base = SimConfig {
        duration_s: 30,
        ..SimConfig::canonical()
    };
    let mut group = c.benchmark_group("scenario_sweep");
    group.sample_size(10);
    for runs in [4u64, 16] {
        let cfgs = seed_sweep(&base, 0..runs);
        group.bench_with_input(BenchmarkId::new("parallel", runs), &cfgs, |b, cfgs| {
            b.iter(|| run_many(black_box(cfgs)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", runs), &cfgs, |b, cfgs| {
            b.iter(|| run_many_sequential(black_box(cfgs)))
        });
    }
    group.finish();
}

fn cert_validation(c: &mut Criterion) {
    let crypto = DigestBackend;
    let issuer = Issuer::new(1, crypto.generate_keypair(1));
    let mut group = c.benchmark_group("cert_validation");
    for n in [1_000usize, 20_000] {
        let certs: Vec<_> = (0..n as u64)
            .map(|i| {
                let fp = crypto.generate_keypair(i).fingerprint;
                issuer.issue(&crypto, CertKind::Identity, i, fp, i % 600, None).unwrap()
            })
            .collect();
        let key = issuer.keys.public_key;
        group.bench_with_input(BenchmarkId::new("parallel", n), &certs, |b, certs| {
            b.iter(|| validate_batch(&crypto, black_box(certs), &key, 10))
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &certs, |b, certs| {
            b.iter(|| validate_batch_sequential(&crypto, black_box(certs), &key, 10))
        });
    }
    group.finish();
}

criterion_group!(benches, scenario_sweep, cert_validation);
criterion_main!(benches);
