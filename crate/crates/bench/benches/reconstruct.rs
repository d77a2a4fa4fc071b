use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use wdvv_bench::{multiplet, WORKLOADS};
use wdvv_core::{reconstruct, residual_scan, SeedMode};

fn bench_reconstruct(c: &mut Criterion) {
    let mut group = c.benchmark_group("reconstruct");
    group.sample_size(10);
    for &(a, m) in WORKLOADS {
        let mult = multiplet(a);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{a}/m{m}")),
            &mult,
            |b, mult| b.iter(|| reconstruct(black_box(mult), m, SeedMode::Standard).unwrap()),
        );
    }
    group.finish();
}

fn bench_residual_scan(c: &mut Criterion) {
    let mut group = c.benchmark_group("residual_scan");
    group.sample_size(10);
    for &(a, m) in WORKLOADS {
        let (p, _) = reconstruct(&multiplet(a), m, SeedMode::Standard).unwrap();
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{a}/m{m}")),
            &p,
            |b, p| b.iter(|| residual_scan(black_box(p), m)),
        );
    }
    group.finish();
}

criterion_group!(benches, bench_reconstruct, bench_residual_scan);
criterion_main!(benches);
