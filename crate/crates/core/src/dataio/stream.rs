use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EncodedTrial;

/// Deterministic replay order over encoded trials.
#[derive(Debug, Clone)]
pub struct TrialStream {
    inner: std::vec::IntoIter<EncodedTrial>,
}

impl Iterator for TrialStream {
    type Item = EncodedTrial;

    fn next(&mut self) -> Option<EncodedTrial> {
        self.inner.next()
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.inner.size_hint()
    }
}

impl ExactSizeIterator for TrialStream {}

/// Orders trials by ascending timestamp (stable) or, with a seed, by a
/// seeded shuffle. Stream indices are reassigned to the new positions.
pub fn stream(mut trials: Vec<EncodedTrial>, order_seed: Option<u64>) -> TrialStream {
    match order_seed {
        None => trials.sort_by_key(|t| t.timestamp),
        Some(seed) => trials.shuffle(&mut ChaCha8Rng::seed_from_u64(seed)),
    }
    for (i, t) in trials.iter_mut().enumerate() {
        t.index = i;
    }
    TrialStream {
        inner: trials.into_iter(),
    }
}
