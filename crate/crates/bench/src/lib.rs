//! Criterion benchmarks for the `nonlocality` crate live in `benches/`.
