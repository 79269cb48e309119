//! Criterion benchmarks for the feasibility engine; see `benches/engine.rs`.
