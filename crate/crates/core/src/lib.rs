//! gmah-core: a two-level goal-conditioned policy stack for gridworlds.
//!
//! The crate bundles a small dense-network substrate, two turn-based grid
//! environments (a single-agent door/key room pair and a three-agent trash
//! collection task), subgoal-based hierarchical policies with hindsight
//! relabeling, an autoencoder-gated proactive goal-update trigger, a
//! monotonic goal-value mixing network for multi-agent credit assignment,
//! and the staged trainer plus an advantage actor-critic baseline.

pub mod adaptive;
pub mod ckpt;
pub mod config;
pub mod env;
pub mod error;
pub mod hrl;
pub mod metrics;
pub mod mixer;
pub mod nn;
pub mod plot;
pub mod rng;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use tensor::Tensor;
