use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stablelab_bench::{bump, params};
use stablelab_core::kernel_engine::{extend_grid, stable_density};
use stablelab_core::littlewood_paley::{carre_du_champ, maximal_function};

fn density(c: &mut Criterion) {
    let mut g = c.benchmark_group("stable_density");
    for alpha in [0.5, 1.0, 1.5] {
        let p = params(1, alpha);
        g.bench_with_input(BenchmarkId::from_parameter(alpha), &p, |b, p| {
            b.iter(|| stable_density(*p, 1.0, 2.0).unwrap())
        });
    }
    g.finish();
}

fn extension(c: &mut Criterion) {
    let f = bump(1, 257, 16.0);
    let p = params(1, 1.0);
    c.bench_function("extend_grid d=1 n=257 t=1", |b| b.iter(|| extend_grid(&f, p, 1.0).unwrap()));
}

fn square(c: &mut Criterion) {
    let f = bump(1, 257, 16.0);
    let p = params(1, 1.0);
    c.bench_function("carre_du_champ d=1 n=257", |b| b.iter(|| carre_du_champ(&f, p).unwrap()));
    c.bench_function("maximal_function d=1 n=257", |b| b.iter(|| maximal_function(&f).unwrap()));
}

criterion_group!(benches, density, extension, square);
criterion_main!(benches);
