//! Dueling bandit gradient descent.
//!
//! Each trial the exploit scorer `M` (parameters `P`) is paired with an
//! exploratory copy `M'` at `P + δ·u`, `u` uniform on the unit sphere. Both
//! rank the candidates, the two rankings are merged by probabilistic
//! interleaving, and when the clicked slot came from `M'` the exploit
//! parameters step toward it: `P ← P + β·δ·u`. Otherwise `P` is left alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::rank::rank_top_k;
use super::{Provenance, Slate};
use crate::models::Scorer;
use crate::{Error, ItemIndex, Result};

#[derive(Debug, Clone)]
pub struct DbgdState {
    pub exploit: Scorer,
    delta: f64,
    beta: f64,
    rng: ChaCha8Rng,
}

/// An exploratory scorer and the unit direction it was built from.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub explore: Scorer,
    pub direction: Vec<f64>,
}

/// Standard-normal draw normalized to unit length.
pub fn sample_unit_direction<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Merges two rankings slot by slot: a fair coin picks the source list,
/// which contributes its best item not yet on the slate; an exhausted
/// source hands the slot to the other list. Provenance records the list
/// that actually contributed.
pub fn probabilistic_interleave<R: Rng + ?Sized>(
    exploit: &[ItemIndex],
    explore: &[ItemIndex],
    k: usize,
    rng: &mut R,
) -> Result<Slate> {
    let mut union: Vec<ItemIndex> = exploit.iter().chain(explore).copied().collect();
    union.sort_unstable();
    union.dedup();
    if union.len() < k {
        return Err(Error::InsufficientItems {
            needed: k,
            available: union.len(),
        });
    }
    let mut items = Vec::with_capacity(k);
    let mut provenance = Vec::with_capacity(k);
    let (mut i_exploit, mut i_explore) = (0, 0);
    let next = |list: &[ItemIndex], cursor: &mut usize, taken: &[ItemIndex]| -> Option<ItemIndex> {
        while *cursor < list.len() {
            let item = list[*cursor];
            *cursor += 1;
            if !taken.contains(&item) {
                return Some(item);
            }
        }
        None
    };
    while items.len() < k {
        let prefer_exploit = rng.random_bool(0.5);
        let (first, second) = if prefer_exploit {
            (Provenance::Exploit, Provenance::Explore)
        } else {
            (Provenance::Explore, Provenance::Exploit)
        };
        let mut pick = |source: Provenance, items: &[ItemIndex]| match source {
            Provenance::Exploit => next(exploit, &mut i_exploit, items),
            Provenance::Explore => next(explore, &mut i_explore, items),
        };
        let (item, source) = match pick(first, &items) {
            Some(item) => (item, first),
            None => (
                pick(second, &items).expect("union holds at least k items"),
                second,
            ),
        };
        items.push(item);
        provenance.push(source);
    }
    Ok(Slate { items, provenance })
}

impl DbgdState {
    pub fn new(exploit: Scorer, delta: f64, beta: f64, seed: u64) -> Result<Self> {
        for (name, v) in [("delta", delta), ("beta", beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "dbgd {name} must be finite and positive"
                )));
            }
        }
        Ok(Self {
            exploit,
            delta,
            beta,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Draws `u` and builds the exploratory scorer at `P + δ·u`.
    pub fn propose(&mut self) -> Proposal {
        let direction = sample_unit_direction(&mut self.rng, self.exploit.n_params());
        let mut explore = self.exploit.clone();
        for (p, u) in explore.parameters_mut().iter_mut().zip(&direction) {
            *p += self.delta * u;
        }
        Proposal { explore, direction }
    }

    /// Ranks the candidates with both models and interleaves the results.
    pub fn select(
        &mut self,
        proposal: &Proposal,
        context: &[f64],
        candidates: &[ItemIndex],
        k: usize,
        n_items: usize,
    ) -> Result<Slate> {
        let exploit = rank_top_k(&self.exploit, context, candidates, k, n_items);
        let explore = rank_top_k(&proposal.explore, context, candidates, k, n_items);
        probabilistic_interleave(&exploit, &explore, k, &mut self.rng)
    }

    /// Applies the update rule; returns whether `P` moved.
    pub fn feedback(&mut self, slate: &Slate, hit_slot: Option<usize>, direction: &[f64]) -> bool {
        let Some(slot) = hit_slot else { return false };
        if slate.provenance[slot] != Provenance::Explore {
            return false;
        }
        let step = self.beta * self.delta;
        for (p, u) in self.exploit.parameters_mut().iter_mut().zip(direction) {
            *p += step * u;
        }
        true
    }
}
