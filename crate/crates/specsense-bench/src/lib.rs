// SPDX-License-Identifier: MIT

//! Benchmark-only crate; see `benches/kernels.rs`. The library target
//! exists solely so Cargo accepts the package.
