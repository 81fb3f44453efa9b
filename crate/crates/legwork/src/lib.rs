//! Desk-scale large-batch training lab.
//!
//! The crate reproduces the schedule algebra behind linear-epoch gradual
//! warmup: when the batch size grows by k, the learning rate grows by
//! sqrt(k) and the warmup length in epochs grows by k, so one tuned
//! baseline yields the whole batch-size column of a scaling table. Around
//! that core sit a small reverse-mode autodiff engine, MLP/LSTM models, the
//! classic first-order solvers plus layer-wise trust-ratio scaling, a
//! finite-difference curvature probe, dataset plumbing, and a config-driven
//! experiment harness.
//!
//! Start with the runnable examples (`cargo run --release --example
//! scaling_tables`) or the `legwork` CLI (`legwork run <config.toml>`).

pub mod autodiff;
pub mod data;
pub mod error;
pub mod harness;
pub mod models;
pub mod optim;
pub mod probe;
pub mod schedule;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
