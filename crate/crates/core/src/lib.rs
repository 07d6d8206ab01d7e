//! Fault diagnosis of electronic interconnects from reflection-coefficient
//! signal patterns.
//!
//! The crate covers the full pipeline:
//!
//! * [`rfsim`] — synthesizes frequency-domain reflection-coefficient sweeps
//!   for normal, cracked, and corroded interconnects from a transmission-line
//!   cascade model, and injects additive Gaussian noise.
//! * [`dataio`] — dataset model, stratified splitting, per-frequency
//!   standardization, binary subset construction for the severity ladders,
//!   CSV persistence, and Touchstone `.s1p` ingestion.
//! * [`nn`] — from-scratch dense and 1-D convolution networks with Adam,
//!   early stopping, and a finite-difference gradient checker.
//! * [`srel`] — the severity-rating ensemble: a normal-state detector plus
//!   one ladder of binary scorers per defect cause, aggregated into a
//!   cause + severity diagnosis.
//! * [`baselines`] — comparison methods: random forest, k-means clustering,
//!   and single-frequency point features.
//! * [`analysis`] — metrics, noise-robustness sweeps, inference benchmarks,
//!   and exact t-SNE embedding for visualization.
//!
//! See the guide under `book/` for a narrative walk-through.

pub mod analysis;
pub mod baselines;
pub mod dataio;
pub mod nn;
pub mod rfsim;
pub mod srel;
pub mod util;

pub use dataio::{DefectCause, DefectLabel, LabeledDataset, LabeledSample, SplitKind};
pub use rfsim::{FrequencyGrid, SignalPattern};
