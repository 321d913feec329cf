//! Criterion benchmarks of the heatflow kernels live in `benches/kernels.rs`.
