//! Frequency-domain system identification for lightly damped mechanical
//! structures.
//!
//! The crate builds state-space models directly from measured frequency
//! response functions via tangential interpolation of a structured matrix
//! pencil, then extracts natural frequencies, damping ratios, and mode
//! shapes. Around that core sit an estimation layer for turning time
//! records into FRFs, a stabilization-diagram engine for separating
//! physical modes from numerical artifacts, a clamped-beam reference model
//! for end-to-end validation, and benchmarking/comparison utilities.

pub mod beam;
pub mod cli;
pub mod config;
pub mod error;
pub mod frf;
pub mod loewner;
pub mod metrics;
pub mod modal;
pub mod signal;
pub mod stabilization;
pub mod svd;
pub mod synth;

pub use error::{Error, Result};
