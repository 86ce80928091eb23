//! Separating the causes of a shift in a target series from the triggers
//! that switch them on.
//!
//! The pipeline standardizes a panel, splits the window at the largest mean
//! rise of the target, infers lagged causal parents on each side, and tests
//! which rising parents moderate the others.

pub mod algorithm;
pub mod changepoint;
pub mod error;
pub mod hmml;
pub mod panel;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use algorithm::{run, run_with_backend, AlgorithmConfig, AlgorithmOutput, CauseTriggerPair, LagChoice, StopReason};
pub use error::{Error, Result};
pub use panel::{standardize, CellMeta, StandardizedPanel, TimeSeriesPanel};
