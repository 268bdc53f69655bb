use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataio::EncodedTrial;
use crate::ItemIndex;

/// Running mean of the contexts in which an item was the logged choice and
/// was on the slate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemProfile {
    pub item: ItemIndex,
    pub mean_context: Vec<f64>,
    pub count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ItemProfiles {
    profiles: BTreeMap<ItemIndex, ItemProfile>,
}

impl ItemProfiles {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn get(&self, item: ItemIndex) -> Option<&ItemProfile> {
        self.profiles.get(&item)
    }

    /// Profiles in ascending item order.
    pub fn iter(&self) -> impl Iterator<Item = &ItemProfile> {
        self.profiles.values()
    }

    pub fn update(&mut self, trial: &EncodedTrial, slate_hit: bool) {
        if slate_hit {
            self.add_hit(trial.chosen_item, &trial.context);
        }
    }

    pub fn add_hit(&mut self, item: ItemIndex, context: &[f64]) {
        let profile = self.profiles.entry(item).or_insert_with(|| ItemProfile {
            item,
            mean_context: vec![0.0; context.len()],
            count: 0,
        });
        profile.count += 1;
        let n = profile.count as f64;
        for (m, c) in profile.mean_context.iter_mut().zip(context) {
            *m += (c - *m) / n;
        }
    }
}
