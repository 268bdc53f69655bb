use crate::models::ItemScorer;
use crate::ItemIndex;

/// The `k` highest-scoring items, descending; equal scores keep ascending
/// item order.
pub fn top_k(items: &[ItemIndex], scores: &[f64], k: usize) -> Vec<ItemIndex> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then(items[a].cmp(&items[b]))
    });
    order.into_iter().take(k).map(|i| items[i]).collect()
}

/// Top `k` candidates by score. When there are fewer than `k` candidates the
/// slate is padded with the best-scoring items from the rest of the
/// `0..n_items` vocabulary.
pub fn rank_top_k<S: ItemScorer + ?Sized>(
    scorer: &S,
    context: &[f64],
    candidates: &[ItemIndex],
    k: usize,
    n_items: usize,
) -> Vec<ItemIndex> {
    let scores = scorer.score_items(context, candidates);
    let mut ranked = top_k(candidates, &scores, k);
    if ranked.len() < k {
        let rest: Vec<ItemIndex> = (0..n_items).filter(|i| !candidates.contains(i)).collect();
        let rest_scores = scorer.score_items(context, &rest);
        ranked.extend(top_k(&rest, &rest_scores, k - ranked.len()));
    }
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) struct Fixed(pub Vec<f64>);

    impl ItemScorer for Fixed {
        fn score_items(&self, _context: &[f64], items: &[ItemIndex]) -> Vec<f64> {
            items.iter().map(|&i| self.0[i]).collect()
        }
    }

    #[test]
    fn sorts_descending() {
        let s = Fixed(vec![0.9, 0.5, 0.1]);
        assert_eq!(rank_top_k(&s, &[], &[0, 1, 2], 2, 3), vec![0, 1]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let s = Fixed(vec![0.3; 5]);
        assert_eq!(rank_top_k(&s, &[], &[4, 2, 3, 1], 2, 5), vec![1, 2]);
    }

    #[test]
    fn pads_from_global_items() {
        let s = Fixed(vec![0.1, 0.9, 0.8, 0.2]);
        assert_eq!(rank_top_k(&s, &[], &[3], 3, 4), vec![3, 1, 2]);
    }

    proptest! {
        #[test]
        fn equals_full_sort_prefix(scores in prop::collection::vec(0.0f64..1.0, 1..40), k in 1usize..10) {
            let items: Vec<usize> = (0..scores.len()).collect();
            let mut full = items.clone();
            full.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
            full.truncate(k);
            prop_assert_eq!(top_k(&items, &scores, k), full);
        }

        #[test]
        fn monotone_transform_keeps_ranking(scores in prop::collection::vec(0.001f64..0.999, 1..30), k in 1usize..6) {
            let items: Vec<usize> = (0..scores.len()).collect();
            let logits: Vec<f64> = scores.iter().map(|p| (p / (1.0 - p)).ln()).collect();
            prop_assert_eq!(top_k(&items, &scores, k), top_k(&items, &logits, k));
        }
    }
}
