//! Channel model, capacity bounds and coding for resistive crossbar memory.
//!
//! The crate is organised bottom-up:
//!
//! - [`crossbar`]: single-array data/selector model, sneak-path detection,
//!   noisy readback and sneak-path-rate statistics.
//! - [`capacity`]: mutual information of the (ε, σ)-channel and the capacity
//!   bounds of the block-varying channel.
//! - [`shaper`]: rate-1 data shaper (repeat, structured interleave, L-to-1
//!   map) and its soft-in soft-out de-shaper.
//! - [`ira`]: systematic irregular repeat-accumulate code, sum-product
//!   decoder and Monte Carlo density evolution.
//! - [`detect`]: per-array sneak-path-rate estimation and the elementary
//!   signal estimator producing channel LLRs.
//! - [`pipeline`]: across-array storage of codewords and the end-to-end
//!   BER harness.

pub mod capacity;
pub mod config;
pub mod crossbar;
pub mod detect;
mod error;
pub mod ira;
pub mod llr;
pub mod numerics;
pub mod pipeline;
pub mod seed;
pub mod shaper;

/// Version of this crate, recorded in experiment manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use capacity::{CapacityReport, EsChannel};
pub use crossbar::{ChannelParams, CrossbarState, ReadbackArray};
pub use detect::{ArrayEstimate, Level};
pub use error::{Error, Result};
pub use ira::{IraCodeSpec, IraDecoder};
pub use llr::{LlrFrame, LLR_CLAMP};
pub use pipeline::{ChannelKind, Experiment, ExperimentConfig, TrialResult};
pub use shaper::{Deshaper, InterleaverKind, MappingTable, ShaperSpec};
