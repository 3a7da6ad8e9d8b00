//! Criterion benchmarks for `oulab-core`; see `benches/kernels.rs`.
