use serde::{Deserialize, Serialize};

use crate::ItemIndex;

/// Which ranked list a slate slot came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exploit,
    Explore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slate {
    pub items: Vec<ItemIndex>,
    pub provenance: Vec<Provenance>,
}

impl Slate {
    pub fn uniform(items: Vec<ItemIndex>, provenance: Provenance) -> Self {
        let provenance = vec![provenance; items.len()];
        Self { items, provenance }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn position(&self, item: ItemIndex) -> Option<usize> {
        self.items.iter().position(|&i| i == item)
    }

    pub fn contains(&self, item: ItemIndex) -> bool {
        self.items.contains(&item)
    }
}
