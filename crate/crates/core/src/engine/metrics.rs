//! CTR, average CTR, Precision@k and the relative-CTR series.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ItemIndex;

/// What the metrics need from a logged slate.
pub trait Clicks {
    /// Items on the slate.
    fn shown(&self) -> &[ItemIndex];
    /// Whether `item` was clicked on this slate.
    fn clicked(&self, item: ItemIndex) -> bool;
    /// Number of clicked slate items.
    fn n_clicks(&self) -> usize;
}

/// Clicks and appearances per item, over items shown at least once.
pub fn item_counts<O: Clicks>(outcomes: &[O]) -> BTreeMap<ItemIndex, (u64, u64)> {
    let mut counts = BTreeMap::new();
    for o in outcomes {
        for &item in o.shown() {
            let c: &mut (u64, u64) = counts.entry(item).or_default();
            c.1 += 1;
            if o.clicked(item) {
                c.0 += 1;
            }
        }
    }
    counts
}

fn ratio(clicks: u64, shown: u64) -> f64 {
    if shown == 0 {
        0.0
    } else {
        clicks as f64 / shown as f64
    }
}

/// Clicks on `item` over slates containing it; 0 when never shown.
pub fn compute_ctr<O: Clicks>(outcomes: &[O], item: ItemIndex) -> f64 {
    let (mut clicks, mut shown) = (0, 0);
    for o in outcomes {
        if o.shown().contains(&item) {
            shown += 1;
            if o.clicked(item) {
                clicks += 1;
            }
        }
    }
    ratio(clicks, shown)
}

pub fn per_item_ctr<O: Clicks>(outcomes: &[O]) -> BTreeMap<ItemIndex, f64> {
    item_counts(outcomes)
        .into_iter()
        .map(|(item, (c, s))| (item, ratio(c, s)))
        .collect()
}

/// Mean per-item CTR over the items shown at least once (0 if none were).
pub fn compute_avg_ctr<O: Clicks>(outcomes: &[O]) -> f64 {
    let ctrs = per_item_ctr(outcomes);
    if ctrs.is_empty() {
        return 0.0;
    }
    ctrs.values().sum::<f64>() / ctrs.len() as f64
}

/// Mean over trials of (clicked slate items) / k.
pub fn compute_precision_at_k<O: Clicks>(outcomes: &[O], k: usize) -> f64 {
    if outcomes.is_empty() || k == 0 {
        return 0.0;
    }
    let total: f64 = outcomes
        .iter()
        .map(|o| o.n_clicks() as f64 / k as f64)
        .sum();
    total / outcomes.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub window: usize,
    pub start_trial: usize,
    pub trials: usize,
    pub avg_ctr: f64,
    pub relative_ctr: f64,
}

/// Average CTR per non-overlapping window of `window` trials (the last one
/// may be shorter), divided by `baseline_ctr`. A zero baseline gives 0.
pub fn relative_ctr_series<O: Clicks>(
    outcomes: &[O],
    window: usize,
    baseline_ctr: f64,
) -> Vec<SeriesPoint> {
    let window = window.max(1);
    outcomes
        .chunks(window)
        .enumerate()
        .map(|(w, chunk)| {
            let avg_ctr = compute_avg_ctr(chunk);
            SeriesPoint {
                window: w,
                start_trial: w * window,
                trials: chunk.len(),
                avg_ctr,
                relative_ctr: if baseline_ctr > 0.0 {
                    avg_ctr / baseline_ctr
                } else {
                    0.0
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Log {
        shown: Vec<ItemIndex>,
        clicked: Vec<ItemIndex>,
    }

    impl Clicks for Log {
        fn shown(&self) -> &[ItemIndex] {
            &self.shown
        }
        fn clicked(&self, item: ItemIndex) -> bool {
            self.clicked.contains(&item)
        }
        fn n_clicks(&self) -> usize {
            self.clicked
                .iter()
                .filter(|c| self.shown.contains(c))
                .count()
        }
    }

    fn log(shown: &[usize], clicked: &[usize]) -> Log {
        Log {
            shown: shown.to_vec(),
            clicked: clicked.to_vec(),
        }
    }

    #[test]
    fn ctr_counts_clicks_over_appearances() {
        let mut logs: Vec<Log> = (0..7).map(|_| log(&[4], &[])).collect();
        logs.extend((0..3).map(|_| log(&[4], &[4])));
        assert_eq!(compute_ctr(&logs, 4), 0.3);
        assert_eq!(compute_ctr(&logs, 9), 0.0);
    }

    #[test]
    fn avg_ctr_is_mean_over_shown_items() {
        let mut logs: Vec<Log> = (0..5)
            .map(|i| log(&[0], if i == 0 { &[0] } else { &[] }))
            .collect();
        logs.extend((0..5).map(|i| log(&[1], if i < 2 { &[1] } else { &[] })));
        assert!((compute_avg_ctr(&logs) - 0.3).abs() < 1e-15);
        assert_eq!(compute_avg_ctr(&logs[..5]), 0.2);
    }

    #[test]
    fn precision_handles_multiple_clicks() {
        assert!((compute_precision_at_k(&[log(&[1, 2, 3], &[1, 3])], 3) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            compute_precision_at_k(&[log(&[1, 2, 3], &[]), log(&[1, 2, 3], &[7])], 3),
            0.0
        );
    }

    #[test]
    fn series_windows() {
        let logs: Vec<Log> = (0..10)
            .map(|i| log(&[i % 2], if i % 2 == 0 { &[0] } else { &[] }))
            .collect();
        let s = relative_ctr_series(&logs, 4, 0.5);
        assert_eq!(s.len(), 3);
        assert_eq!(s[2].trials, 2);
        assert_eq!(s[0].relative_ctr, 1.0);
        assert_eq!(relative_ctr_series(&logs, 100, 0.5).len(), 1);
    }
}
