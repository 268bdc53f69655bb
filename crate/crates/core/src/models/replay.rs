use std::collections::VecDeque;
use std::sync::Arc;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, ItemIndex, Result};

/// One (context, item, reward) observation. Contexts are shared between
/// the entries of a slate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayEntry {
    pub context: Arc<[f64]>,
    pub item: ItemIndex,
    pub reward: bool,
}

impl ReplayEntry {
    pub fn new(context: Arc<[f64]>, item: ItemIndex, reward: bool) -> Self {
        Self {
            context,
            item,
            reward,
        }
    }

    pub fn label(&self) -> f64 {
        if self.reward {
            1.0
        } else {
            0.0
        }
    }
}

/// Insertion-ordered memory of observations; the oldest entry is evicted
/// once `capacity` is reached.
#[derive(Debug, Clone, Default)]
pub struct ReplayBuffer {
    entries: VecDeque<ReplayEntry>,
    capacity: Option<usize>,
}

impl ReplayBuffer {
    pub fn new(capacity: Option<usize>) -> Self {
        Self {
            entries: VecDeque::new(),
            capacity,
        }
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, entry: ReplayEntry) {
        if self.capacity == Some(0) {
            return;
        }
        if self.capacity.is_some_and(|cap| self.entries.len() >= cap) {
            self.entries.pop_front();
        }
        self.entries.push_back(entry);
    }

    pub fn get(&self, i: usize) -> Option<&ReplayEntry> {
        self.entries.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReplayEntry> {
        self.entries.iter()
    }
}

/// Uniform minibatch: without replacement when the buffer holds at least
/// `n` entries, with replacement otherwise.
pub fn sample_minibatch<R: Rng + ?Sized>(
    buffer: &ReplayBuffer,
    n: usize,
    rng: &mut R,
) -> Result<Vec<ReplayEntry>> {
    if buffer.is_empty() {
        return Err(Error::EmptyBuffer);
    }
    let len = buffer.len();
    let picks: Vec<usize> = if len >= n {
        index::sample(rng, len, n).into_vec()
    } else {
        (0..n).map(|_| rng.random_range(0..len)).collect()
    };
    Ok(picks
        .into_iter()
        .map(|i| buffer.entries[i].clone())
        .collect())
}

/// Cadence of partial batch updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateSchedule {
    #[serde(default = "default_minibatch")]
    pub minibatch_size: usize,
    #[serde(default = "default_interval")]
    pub interval_trials: usize,
    /// Minibatch gradient steps taken at each update point.
    #[serde(default = "default_steps")]
    pub steps_per_update: usize,
    /// Replay buffer cap in entries; unbounded when absent.
    #[serde(default)]
    pub buffer_capacity: Option<usize>,
}

fn default_minibatch() -> usize {
    1000
}
fn default_interval() -> usize {
    5000
}
fn default_steps() -> usize {
    20
}

impl Default for UpdateSchedule {
    fn default() -> Self {
        Self {
            minibatch_size: default_minibatch(),
            interval_trials: default_interval(),
            steps_per_update: default_steps(),
            buffer_capacity: None,
        }
    }
}

impl UpdateSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.minibatch_size == 0 || self.interval_trials == 0 || self.steps_per_update == 0 {
            return Err(Error::config(
                "schedule.minibatch_size, interval_trials and steps_per_update must be positive",
            ));
        }
        if self.buffer_capacity == Some(0) {
            return Err(Error::config("schedule.buffer_capacity must be positive"));
        }
        Ok(())
    }
}
