//! Batch simulation harness for cell-free massive MIMO spectral-efficiency
//! studies. The library side of the `cellfree-sim` binary: TOML
//! configuration, multi-setup sweeps over random network realizations,
//! CSV/summary emission, named reproduction presets, and a closed-form
//! versus Monte Carlo validation suite.
//!
//! All randomness flows from a single master seed through labelled
//! substreams, so a sweep is reproducible from its config file alone and
//! bit-identical across thread counts.

pub mod config;
pub mod emit;
pub mod presets;
pub mod sweep;
pub mod validate;
