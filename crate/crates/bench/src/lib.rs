//! Criterion benchmarks for agesim live under `benches/`.
