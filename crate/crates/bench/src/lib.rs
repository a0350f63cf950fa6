//! Criterion benchmarks for rectiplan; see `benches/`.
