//! Benchmark-only package; see `benches/datapath.rs`.
