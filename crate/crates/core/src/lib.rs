//! Cross-silo federated training simulator for a BIO sequence tagger.
//!
//! The crate is organized around six concerns:
//!
//! - [`params`]: flat parameter vectors with a fixed layout and digests.
//! - [`tagger`]: the windowed feedforward tagger, per-sentence gradients,
//!   mini-batch SGD and token-level F1 evaluation.
//! - [`privacy`]: per-example gradient clipping, noisy DP-SGD steps, the
//!   log-moment accountant and per-silo noise calibration.
//! - [`corpus`]: synthetic multi-silo corpus generation, splits and CoNLL
//!   file I/O.
//! - [`federation`]: the round loop, local training, averaging aggregation
//!   and the run log of shipped updates.
//! - [`finetune`]: post-federation local fine-tuning and the transcript
//!   equality verifier.

pub mod corpus;
pub mod error;
pub mod federation;
pub mod finetune;
pub mod params;
pub mod privacy;
pub mod rng;
pub mod tagger;

pub use error::{Error, Result};
