//! Benchmark-only crate; the measurements live in `benches/engine.rs`.
//! Run them with `cargo bench -p twincheck-bench`.
