use std::sync::Arc;

use approx::assert_abs_diff_eq;
use clusterduel::models::{ItemScorer, ReplayEntry, Scorer};
use clusterduel::policies::{
    bootstrap_select, epsilon_greedy_select, fee_select, nearest_rank_percentile,
    probabilistic_interleave, random_select, rank_top_k, sample_unit_direction, static_select,
    BootstrapEnsembles, BootstrapMode, DbgdState, PerArmModels, PolicyId, Provenance, Slate,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn assert_valid(slate: &Slate, k: usize, n_items: usize) {
    assert_eq!(slate.items.len(), k);
    assert_eq!(slate.provenance.len(), k);
    let mut sorted = slate.items.clone();
    sorted.sort_unstable();
    sorted.dedup();
    assert_eq!(sorted.len(), k, "duplicates in {:?}", slate.items);
    assert!(slate.items.iter().all(|&i| i < n_items));
}

fn candidates_strategy() -> impl Strategy<Value = (usize, Vec<usize>, usize)> {
    (2usize..16).prop_flat_map(|n| {
        (
            Just(n),
            proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n),
            1..=n,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_selector_returns_k_distinct_items((n, cands, k) in candidates_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ctx = vec![0.3, -0.2, 1.0];
        let shared = Scorer::mlp(3, n, &[4], &mut rng).unwrap();
        let arms = PerArmModels::new(n, 3);
        let ens = BootstrapEnsembles::new(n, 3, 4);

        assert_valid(&random_select(&cands, k, n, &mut rng), k, n);
        assert_valid(&epsilon_greedy_select(&shared, &ctx, &cands, k, n, 0.3, &mut rng), k, n);
        assert_valid(&fee_select(seed as usize % 10, 5, &arms, &ctx, &cands, k, n, &mut rng), k, n);
        assert_valid(&static_select(&shared, &ctx, &cands, k, n), k, n);
        assert_valid(&bootstrap_select(BootstrapMode::Ucb, &ens, &ctx, &cands, k, n, 95.0, &mut rng), k, n);
        assert_valid(&bootstrap_select(BootstrapMode::Ts, &ens, &ctx, &cands, k, n, 95.0, &mut rng), k, n);
        assert_valid(
            &clusterduel::policies::active_explorer_select(&arms, &ctx, &cands, k, n, 0.5, &mut rng),
            k,
            n,
        );

        // candidates take precedence over padding
        let slate = static_select(&shared, &ctx, &cands, k, n);
        let from_cands = slate.items.iter().filter(|i| cands.contains(i)).count();
        prop_assert_eq!(from_cands, k.min(cands.len()));
    }

    #[test]
    fn interleave_draws_each_slot_from_its_source(
        n in 2usize..12,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1 + (seed as usize % n);
        let mut a: Vec<usize> = (0..n).collect();
        let mut b = a.clone();
        use rand::seq::SliceRandom;
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        let exploit = &a[..k];
        let explore = &b[..k];
        let slate = probabilistic_interleave(exploit, explore, k, &mut rng).unwrap();
        assert_valid(&slate, k, n);
        for (item, p) in slate.items.iter().zip(&slate.provenance) {
            match p {
                Provenance::Exploit => prop_assert!(exploit.contains(item)),
                Provenance::Explore => prop_assert!(explore.contains(item)),
            }
        }
        // each source contributes its items in rank order
        for (source, list) in [(Provenance::Exploit, exploit), (Provenance::Explore, explore)] {
            let taken: Vec<usize> = slate.items.iter().zip(&slate.provenance).filter(|(_, p)| **p == source).map(|(i, _)| *i).collect();
            let pos: Vec<usize> = taken.iter().map(|i| list.iter().position(|x| x == i).unwrap()).collect();
            prop_assert!(pos.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn dbgd_feedback_moves_iff_explore_hit(seed in any::<u64>(), slot in proptest::option::of(0usize..3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scorer = Scorer::mlp(2, 5, &[3], &mut rng).unwrap();
        let mut state = DbgdState::new(scorer, 2.0, 0.25, seed).unwrap();
        let proposal = state.propose();
        let before = state.exploit.parameters().to_vec();
        let slate = state.select(&proposal, &[0.1, 0.9], &[0, 1, 2, 3, 4], 3, 5).unwrap();
        let moved = state.feedback(&slate, slot, &proposal.direction);
        let expect = slot.is_some_and(|s| slate.provenance[s] == Provenance::Explore);
        prop_assert_eq!(moved, expect);
        for ((p, b), u) in state.exploit.parameters().iter().zip(&before).zip(&proposal.direction) {
            if expect {
                prop_assert!((p - (b + 0.5 * u)).abs() <= 1e-15 * (1.0 + b.abs()));
            } else {
                prop_assert_eq!(p.to_bits(), b.to_bits());
            }
        }
        // the proposal sits exactly delta away
        let dist: f64 = proposal.explore.parameters().iter().zip(&before).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        prop_assert!((dist - 2.0).abs() < 1e-9);
    }

    #[test]
    fn percentile_is_an_observed_value(values in proptest::collection::vec(-5.0f64..5.0, 1..40), pct in 0.0f64..=100.0) {
        let p = nearest_rank_percentile(&values, pct);
        prop_assert!(values.contains(&p));
        let below = values.iter().filter(|v| **v <= p).count() as f64;
        prop_assert!(below >= pct / 100.0 * values.len() as f64 - 1e-9);
    }

    #[test]
    fn rank_top_k_is_sorted_by_score((n, cands, k) in candidates_strategy(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scorer = Scorer::mlp(2, n, &[3], &mut rng).unwrap();
        let ctx = [0.5, -1.0];
        let ranked = rank_top_k(&scorer, &ctx, &cands, k, n);
        let head: Vec<usize> = ranked.iter().copied().take_while(|i| cands.contains(i)).collect();
        let scores = scorer.score_items(&ctx, &head);
        prop_assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        let best_rest = cands.iter().filter(|i| !head.contains(i)).map(|&i| scorer.score(&ctx, i).unwrap()).fold(f64::NEG_INFINITY, f64::max);
        if let Some(last) = scores.last() {
            prop_assert!(*last >= best_rest);
        }
    }
}

#[test]
fn per_arm_training_touches_only_batch_arms() {
    let mut arms = PerArmModels::new(4, 2);
    let ctx: Arc<[f64]> = Arc::from(vec![1.0, 0.0]);
    let batch = vec![
        ReplayEntry::new(ctx.clone(), 1, true),
        ReplayEntry::new(ctx, 3, false),
    ];
    let before: Vec<Vec<f64>> = (0..4).map(|i| arms.arm(i).parameters().to_vec()).collect();
    arms.train(&batch, 0.5, Default::default()).unwrap();
    for (i, old) in before.iter().enumerate() {
        let changed = arms.arm(i).parameters() != old.as_slice();
        assert_eq!(changed, i == 1 || i == 3, "arm {i}");
    }
    assert!(arms.arm(1).score_context(&[1.0, 0.0]).unwrap() > 0.5);
    assert!(arms.arm(3).score_context(&[1.0, 0.0]).unwrap() < 0.5);
}

#[test]
fn bootstrap_members_diverge_under_poisson_weights() {
    let mut ens = BootstrapEnsembles::new(2, 1, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ctx: Arc<[f64]> = Arc::from(vec![1.0]);
    let batch: Vec<ReplayEntry> = (0..20)
        .map(|i| ReplayEntry::new(ctx.clone(), 0, i % 3 == 0))
        .collect();
    for _ in 0..5 {
        ens.train(&batch, 0.5, &mut rng, Default::default())
            .unwrap();
    }
    let scores = ens.member_scores(&[1.0], 0);
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / scores.len() as f64;
    assert!(var > 1e-6, "{scores:?}");
    assert_abs_diff_eq!(mean, 1.0 / 3.0, epsilon = 0.2);
    // untouched arm stays at the zero-init score
    assert!(ens
        .member_scores(&[1.0], 1)
        .iter()
        .all(|s| (s - 0.5).abs() < 1e-12));
}

#[test]
fn unit_directions_have_unit_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for dim in [1, 7, 4481] {
        let u = sample_unit_direction(&mut rng, dim);
        assert_abs_diff_eq!(u.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn policy_ids_round_trip() {
    for p in PolicyId::ALL {
        let parsed: PolicyId = p.as_str().parse().unwrap();
        assert_eq!(parsed, p);
    }
    assert!("nope".parse::<PolicyId>().is_err());
}
