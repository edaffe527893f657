//! Benchmarks for the core routines live in `benches/`.
