//! Slate-selection policies: dueling bandit gradient descent with
//! probabilistic interleaving, the exploration baselines, and a frozen
//! static scorer.

mod arms;
mod baselines;
mod config;
mod dbgd;
mod rank;
mod slate;

pub use arms::{BootstrapEnsembles, PerArmModels};
pub use baselines::{
    active_explorer_select, bootstrap_select, epsilon_greedy_select, fee_select,
    nearest_rank_percentile, random_select, static_select, BootstrapMode,
};
pub use config::{PolicyConfig, PolicyId};
pub use dbgd::{probabilistic_interleave, sample_unit_direction, DbgdState, Proposal};
pub use rank::{rank_top_k, top_k};
pub use slate::{Provenance, Slate};
