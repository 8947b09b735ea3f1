//! Criterion benchmarks for the hot kernels of `efd-core`; see `benches/`.
