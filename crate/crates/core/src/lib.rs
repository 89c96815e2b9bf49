//! Core algorithms for a sequential retrieval recommender that learns from
//! negative user feedback.
//!
//! The crate is split along the pipeline stages:
//!
//! - [`catalog`]: synthetic item corpus with content clusters and creators
//! - [`simenv`]: simulated users producing interaction trajectories with
//!   dwell, skip, dislike and like signals
//! - [`model`]: gated-recurrent sequence encoder, softmax scoring and exact
//!   top-K retrieval over the full corpus
//! - [`objective`]: the joint training loss (positive cross-entropy plus a
//!   not-to-recommend term for negative labels), exact analytic gradients and
//!   a finite-difference checker
//! - [`train`]: label extraction from logs, minibatch SGD and model variants
//! - [`responsiveness`]: counterfactual fork simulation measuring how much a
//!   model reduces similar recommendations after a dislike
//!
//! Everything here is deterministic: all randomness flows through [`rng::DetRng`]
//! streams derived from explicit seeds, so identical inputs produce bit-identical
//! outputs regardless of scheduling. The crate is `no_std` (with `alloc`); all
//! IO and file formats live in the companion `negrec` crate.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod error;
pub mod eval;
pub mod math;
pub mod model;
pub mod objective;
pub mod responsiveness;
pub mod rng;
pub mod simenv;
pub mod stats;
pub mod train;

pub use catalog::{Corpus, CorpusSpec, Item, ItemId};
pub use error::CoreError;
pub use model::{FeatureConfig, ModelParams};
pub use objective::{LabeledExample, Sign, SoftmaxMode};
pub use rng::DetRng;
pub use simenv::{BehaviorConfig, Event, Policy, Trajectory, UserProfile};
pub use train::{TrainConfig, TrainReport, Variant};
