use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use strz_core::groundstate::{default_weight, ground_pair, GroundStateOptions};
use strz_core::potentials::PotentialSpec;
use strz_core::solver::{split_step_evolve, EvolveOptions};
use strz_core::spectral::{free_propagate, gaussian};
use strz_core::Grid;

fn free(c: &mut Criterion) {
    let mut group = c.benchmark_group("free_propagate");
    for (dim, points) in [(1, 4096), (2, 128), (3, 32)] {
        let grid = Grid::new(dim, 16.0, points).unwrap();
        let u = gaussian(grid, 1.0);
        group.bench_with_input(BenchmarkId::new("dim", dim), &u, |b, u| {
            b.iter(|| free_propagate(black_box(u), 0.5))
        });
    }
    group.finish();
}

fn split_step(c: &mut Criterion) {
    let grid = Grid::new(2, 16.0, 128).unwrap();
    let u = gaussian(grid, 1.0);
    let v = PotentialSpec::static_profile(default_weight(grid)).unwrap();
    let opts = EvolveOptions::new(1e-2);
    c.bench_function("split_step_10_steps_2d", |b| {
        b.iter(|| split_step_evolve(black_box(&u), &v, None, (0.0, 0.1), &opts).unwrap())
    });
}

fn ground(c: &mut Criterion) {
    let mut group = c.benchmark_group("ground_pair");
    group.sample_size(10);
    for (dim, points) in [(1, 256), (2, 64)] {
        let grid = Grid::new(dim, 12.0, points).unwrap();
        let w = default_weight(grid);
        group.bench_with_input(BenchmarkId::new("dim", dim), &w, |b, w| {
            b.iter(|| ground_pair(black_box(w), &GroundStateOptions::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, free, split_step, ground);
criterion_main!(benches);
