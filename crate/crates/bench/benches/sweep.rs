use concept_cover_bench::planted_records;
use concept_cover_core::analysis::{sweep, threshold_grid, Analysis};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn sweep_bench(c: &mut Criterion) {
    let (manifest, records) = planted_records(3);
    let grid = threshold_grid(0.0, 1.0, 0.05).unwrap();
    c.bench_function("analysis_build", |b| {
        b.iter(|| Analysis::new(black_box(&manifest), black_box(&records)).unwrap())
    });
    let analysis = Analysis::new(&manifest, &records).unwrap();
    c.bench_function("sweep_21x21", |b| {
        b.iter(|| sweep(black_box(&analysis), &grid, &grid))
    });
}

criterion_group!(benches, sweep_bench);
criterion_main!(benches);
