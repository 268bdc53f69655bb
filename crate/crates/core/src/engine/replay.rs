use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::metrics::{
    compute_avg_ctr, compute_precision_at_k, per_item_ctr, relative_ctr_series, SeriesPoint,
};
use super::{eval_len, Engine, EngineConfig, TrialOutcome};
use crate::dataio::EncodedTrial;
use crate::par::Exec;
use crate::policies::PolicyId;
use crate::{Error, ItemIndex, Result};

/// Evaluation summary of one replay run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub policy: PolicyId,
    pub k: usize,
    pub seed: u64,
    pub n_items: usize,
    pub n_trials: usize,
    /// First trial of the evaluation window.
    pub eval_start: usize,
    pub eval_trials: usize,
    pub avg_ctr: f64,
    pub precision_at_k: f64,
    /// Fraction of evaluated trials whose slate contained the logged choice.
    pub hit_rate: f64,
    pub per_item_ctr: BTreeMap<ItemIndex, f64>,
    /// Mean candidate-set size over trials after warmup (all trials when the
    /// stream ends inside warmup).
    pub mean_candidates_scored: f64,
    /// Global average CTR of the uniform random policy on the same stream
    /// and seed; denominator of the relative series.
    pub random_baseline_ctr: f64,
    pub relative_ctr_series: Vec<SeriesPoint>,
    pub config: EngineConfig,
}

#[derive(Debug, Clone)]
pub struct ReplayRun {
    pub report: MetricsReport,
    pub outcomes: Vec<TrialOutcome>,
}

/// First evaluated trial index for a stream of `n` trials.
pub fn eval_start(n: usize, eval_fraction: f64) -> usize {
    n - eval_len(n, eval_fraction)
}

fn play(
    trials: &[EncodedTrial],
    n_items: usize,
    context_dim: usize,
    config: &EngineConfig,
    exec: Exec,
) -> Result<Vec<TrialOutcome>> {
    let mut engine =
        Engine::new(config.clone(), n_items, context_dim, trials.len())?.with_exec(exec);
    trials.iter().map(|t| engine.step(t)).collect()
}

pub fn run_replay(
    trials: &[EncodedTrial],
    n_items: usize,
    context_dim: usize,
    config: &EngineConfig,
) -> Result<MetricsReport> {
    run_replay_with(trials, n_items, context_dim, config, Exec::default()).map(|r| r.report)
}

/// Plays the whole stream online and evaluates the final window.
pub fn run_replay_with(
    trials: &[EncodedTrial],
    n_items: usize,
    context_dim: usize,
    config: &EngineConfig,
    exec: Exec,
) -> Result<ReplayRun> {
    if trials.is_empty() {
        return Err(Error::EmptyStream);
    }
    let outcomes = play(trials, n_items, context_dim, config, exec)?;
    let random_baseline_ctr = if config.policy == PolicyId::Random && !config.clustering_enabled {
        compute_avg_ctr(&outcomes)
    } else {
        let mut random = config.clone();
        random.policy = PolicyId::Random;
        random.clustering_enabled = false;
        compute_avg_ctr(&play(trials, n_items, context_dim, &random, exec)?)
    };

    let n = trials.len();
    let start = eval_start(n, config.eval_fraction);
    let eval = &outcomes[start..];
    let warm = config.warmup_trials.min(n);
    let scored = if warm < n {
        &outcomes[warm..]
    } else {
        &outcomes[..]
    };
    let report = MetricsReport {
        policy: config.policy,
        k: config.k,
        seed: config.seed,
        n_items,
        n_trials: n,
        eval_start: start,
        eval_trials: eval.len(),
        avg_ctr: compute_avg_ctr(eval),
        precision_at_k: compute_precision_at_k(eval, config.k),
        hit_rate: eval.iter().map(|o| f64::from(o.reward)).sum::<f64>() / eval.len() as f64,
        per_item_ctr: per_item_ctr(eval),
        mean_candidates_scored: scored
            .iter()
            .map(|o| o.candidates_scored as f64)
            .sum::<f64>()
            / scored.len() as f64,
        random_baseline_ctr,
        relative_ctr_series: relative_ctr_series(
            &outcomes,
            config.series_window,
            random_baseline_ctr,
        ),
        config: config.clone(),
    };
    Ok(ReplayRun { report, outcomes })
}
