use criterion::{criterion_group, criterion_main, Criterion};
use stablelab_bench::params;
use stablelab_core::simulator::{complete_to_boundary, run_path};
use stablelab_core::stable_core::sample_stable_increment;
use stablelab_core::{RngStream, SpaceTimePoint};

fn increments(c: &mut Criterion) {
    let p = params(2, 1.5);
    let mut rng = RngStream::new(1, 0);
    c.bench_function("stable increment d=2", |b| b.iter(|| sample_stable_increment(p, 0.01, &mut rng)));
}

fn paths(c: &mut Criterion) {
    let p = params(1, 1.0);
    let start = SpaceTimePoint::at_height(1, 1.0);
    let mut rng = RngStream::new(2, 0);
    c.bench_function("run_path to t=1, dt=0.01", |b| b.iter(|| run_path(p, &start, 0.01, 1.0, &mut rng).unwrap()));
    c.bench_function("complete_to_boundary", |b| b.iter(|| complete_to_boundary(p, &[0.0], 1.0, &mut rng)));
}

criterion_group!(benches, increments, paths);
criterion_main!(benches);
