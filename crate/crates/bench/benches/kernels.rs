use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use nonlocality::{
    achievable_orderings, binary_condition, builtin_box, maximize_chsh, sample_outcomes,
    CorrelationModel, Event, JammingConfiguration, VelocityGrid, DEFAULT_GEOMETRIC_TOL,
};

fn chsh_optimizer(c: &mut Criterion) {
    let mut group = c.benchmark_group("maximize_chsh");
    group.sample_size(10);
    group.bench_function("singlet", |b| {
        b.iter(|| maximize_chsh(black_box(&CorrelationModel::Singlet)).unwrap())
    });
    group.bench_function("superquantum", |b| {
        b.iter(|| maximize_chsh(black_box(&CorrelationModel::superquantum())).unwrap())
    });
    group.finish();
}

fn binary(c: &mut Criterion) {
    for (name, j) in [("d1", vec![0.1, 0.4]), ("d2", vec![0.1, 0.3, -0.5]), ("d3", vec![0.1, 0.3, -0.2, -0.5])] {
        let cfg = JammingConfiguration::canonical(Event::from_coords(&j).unwrap()).unwrap();
        c.bench_function(&format!("binary_condition/{name}"), |b| {
            b.iter(|| binary_condition(black_box(&cfg), DEFAULT_GEOMETRIC_TOL).unwrap())
        });
    }
}

fn sampling(c: &mut Criterion) {
    let table = builtin_box("singlet-tsirelson").unwrap();
    c.bench_function("sample_outcomes/1e6", |b| {
        b.iter(|| sample_outcomes(black_box(&table), 1_000_000, 7).unwrap())
    });
}

fn orderings(c: &mut Criterion) {
    let events: Vec<Event> = [[-1.0, 0.0], [0.0, 0.5], [1.0, 0.0]]
        .iter()
        .map(|e| Event::from_coords(e).unwrap())
        .collect();
    let grid = VelocityGrid::default();
    c.bench_function("achievable_orderings/canonical_triple", |b| {
        b.iter(|| achievable_orderings(black_box(&events), &grid, DEFAULT_GEOMETRIC_TOL).unwrap())
    });
}

criterion_group!(benches, chsh_optimizer, binary, sampling, orderings);
criterion_main!(benches);
