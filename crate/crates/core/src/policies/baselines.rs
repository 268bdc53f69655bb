//! Exploration baselines and the frozen static policy.

use rand::seq::index;
use rand::Rng;

use super::arms::{BootstrapEnsembles, PerArmModels};
use super::rank::{rank_top_k, top_k};
use super::{Provenance, Slate};
use crate::models::ItemScorer;
use crate::ItemIndex;

/// `k` distinct items drawn uniformly from the candidates, padded from the
/// rest of the vocabulary when there are fewer than `k` candidates.
pub fn random_select<R: Rng + ?Sized>(
    candidates: &[ItemIndex],
    k: usize,
    n_items: usize,
    rng: &mut R,
) -> Slate {
    let mut items: Vec<ItemIndex> = if candidates.len() >= k {
        index::sample(rng, candidates.len(), k)
            .into_iter()
            .map(|i| candidates[i])
            .collect()
    } else {
        candidates.to_vec()
    };
    if items.len() < k {
        let rest: Vec<ItemIndex> = (0..n_items).filter(|i| !candidates.contains(i)).collect();
        let need = (k - items.len()).min(rest.len());
        items.extend(
            index::sample(rng, rest.len(), need)
                .into_iter()
                .map(|i| rest[i]),
        );
    }
    Slate::uniform(items, Provenance::Explore)
}

/// With probability `epsilon` a uniform random slate, otherwise greedy.
#[allow(clippy::too_many_arguments)]
pub fn epsilon_greedy_select<S: ItemScorer + ?Sized, R: Rng + ?Sized>(
    scorer: &S,
    context: &[f64],
    candidates: &[ItemIndex],
    k: usize,
    n_items: usize,
    epsilon: f64,
    rng: &mut R,
) -> Slate {
    if rng.random::<f64>() < epsilon {
        random_select(candidates, k, n_items, rng)
    } else {
        Slate::uniform(
            rank_top_k(scorer, context, candidates, k, n_items),
            Provenance::Exploit,
        )
    }
}

/// Uniform random slates while `trial_index < horizon`, greedy afterwards.
#[allow(clippy::too_many_arguments)]
pub fn fee_select<S: ItemScorer + ?Sized, R: Rng + ?Sized>(
    trial_index: usize,
    horizon: usize,
    scorer: &S,
    context: &[f64],
    candidates: &[ItemIndex],
    k: usize,
    n_items: usize,
    rng: &mut R,
) -> Slate {
    if trial_index < horizon {
        random_select(candidates, k, n_items, rng)
    } else {
        Slate::uniform(
            rank_top_k(scorer, context, candidates, k, n_items),
            Provenance::Exploit,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BootstrapMode {
    Ucb,
    Ts,
}

/// Nearest-rank percentile: the smallest value with at least `pct`% of the
/// sample at or below it.
pub fn nearest_rank_percentile(values: &[f64], pct: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Bootstrapped UCB (percentile of member scores) or Thompson sampling
/// (score of one uniformly chosen member) per arm, then top `k` arms.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_select<R: Rng + ?Sized>(
    mode: BootstrapMode,
    ensembles: &BootstrapEnsembles,
    context: &[f64],
    candidates: &[ItemIndex],
    k: usize,
    n_items: usize,
    ucb_percentile: f64,
    rng: &mut R,
) -> Slate {
    let statistic = |item: ItemIndex, rng: &mut R| {
        let scores = ensembles.member_scores(context, item);
        match mode {
            BootstrapMode::Ucb => nearest_rank_percentile(&scores, ucb_percentile),
            BootstrapMode::Ts => scores[rng.random_range(0..scores.len())],
        }
    };
    let stats: Vec<f64> = candidates.iter().map(|&i| statistic(i, rng)).collect();
    let mut items = top_k(candidates, &stats, k);
    if items.len() < k {
        let rest: Vec<ItemIndex> = (0..n_items).filter(|i| !candidates.contains(i)).collect();
        let rest_stats: Vec<f64> = rest.iter().map(|&i| statistic(i, rng)).collect();
        items.extend(top_k(&rest, &rest_stats, k - items.len()));
    }
    Slate::uniform(items, Provenance::Exploit)
}

/// With probability `uncertainty_share`, samples `k` arms without
/// replacement in proportion to `p·(1−p)`; otherwise (or when every weight
/// is zero) ranks greedily by `p`.
#[allow(clippy::too_many_arguments)]
pub fn active_explorer_select<R: Rng + ?Sized>(
    arms: &PerArmModels,
    context: &[f64],
    candidates: &[ItemIndex],
    k: usize,
    n_items: usize,
    uncertainty_share: f64,
    rng: &mut R,
) -> Slate {
    let greedy = || {
        Slate::uniform(
            rank_top_k(arms, context, candidates, k, n_items),
            Provenance::Exploit,
        )
    };
    if candidates.len() < k || rng.random::<f64>() >= uncertainty_share {
        return greedy();
    }
    let probs = arms.score_items(context, candidates);
    let mut weights: Vec<f64> = probs.iter().map(|p| p * (1.0 - p)).collect();
    if weights.iter().all(|&w| w <= 0.0) {
        return greedy();
    }
    let mut items = Vec::with_capacity(k);
    while items.len() < k {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            // remaining arms carry no uncertainty: fill greedily
            let rest: Vec<usize> = (0..candidates.len())
                .filter(|&i| !items.contains(&candidates[i]))
                .collect();
            let rest_items: Vec<ItemIndex> = rest.iter().map(|&i| candidates[i]).collect();
            let rest_probs: Vec<f64> = rest.iter().map(|&i| probs[i]).collect();
            items.extend(top_k(&rest_items, &rest_probs, k - items.len()));
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut chosen = weights
            .iter()
            .rposition(|&w| w > 0.0)
            .expect("positive total");
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 && target < w {
                chosen = i;
                break;
            }
            target -= w;
        }
        items.push(candidates[chosen]);
        weights[chosen] = 0.0;
    }
    Slate::uniform(items, Provenance::Explore)
}

/// Greedy ranking with a scorer that is never updated.
pub fn static_select<S: ItemScorer + ?Sized>(
    frozen: &S,
    context: &[f64],
    candidates: &[ItemIndex],
    k: usize,
    n_items: usize,
) -> Slate {
    Slate::uniform(
        rank_top_k(frozen, context, candidates, k, n_items),
        Provenance::Exploit,
    )
}
