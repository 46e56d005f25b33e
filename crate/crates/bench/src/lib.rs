//! Criterion benchmarks for the `vervaat` sampler; run with
//! `cargo bench -p vervaat-bench`.
