//! Contextual-bandit recommendation engine with density-clustered candidate
//! reduction, dueling-bandit gradient descent exploration, partial batch
//! updates and a replay simulator for comparing slate policies.
//!
//! The pipeline per logged trial:
//!
//! 1. narrow the item set to the cluster nearest the user context ([`clustering`]),
//! 2. build a top-k slate with the configured policy ([`policies`]),
//! 3. reward 1 when the logged choice is on the slate, 0 otherwise,
//! 4. store per-item feedback and periodically refit the base scorer ([`models`]).
//!
//! [`engine`] drives the loop and computes CTR / Precision@k; [`experiment`]
//! wraps it with config files, reports and the policy-comparison matrix.

pub mod clustering;
pub mod config;
pub mod dataio;
pub mod engine;
mod error;
pub mod experiment;
pub mod models;
pub mod par;
pub mod policies;

pub use error::{Error, ErrorKind, Result};

/// Dense index of an item in the fitted item vocabulary.
pub type ItemIndex = usize;
