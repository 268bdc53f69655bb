//! One-vs-rest per-arm logistic models used by the exploration baselines.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::models::{ItemScorer, ReplayEntry, Scorer};
use crate::par::{self, Exec};
use crate::{ItemIndex, Result};

fn group_by_arm(batch: &[ReplayEntry], n_arms: usize) -> Vec<Vec<ReplayEntry>> {
    let mut groups = vec![Vec::new(); n_arms];
    for e in batch {
        if e.item < n_arms {
            groups[e.item].push(e.clone());
        }
    }
    groups
}

/// A context-only logistic scorer per arm.
#[derive(Debug, Clone)]
pub struct PerArmModels {
    pub(crate) arms: Vec<Scorer>,
}

impl PerArmModels {
    pub fn new(n_arms: usize, context_dim: usize) -> Self {
        Self {
            arms: vec![Scorer::linear(context_dim, 0); n_arms],
        }
    }

    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arm(&self, item: ItemIndex) -> &Scorer {
        &self.arms[item]
    }

    /// One gradient step per arm on that arm's share of `batch`.
    pub fn train(&mut self, batch: &[ReplayEntry], learning_rate: f64, exec: Exec) -> Result<()> {
        let groups = group_by_arm(batch, self.arms.len());
        let updated = par::map_indexed(exec, self.arms.len(), |a| -> Result<Option<Scorer>> {
            if groups[a].is_empty() {
                return Ok(None);
            }
            let mut arm = self.arms[a].clone();
            arm.sgd_update_with(&groups[a], None, learning_rate, Exec::Sequential)?;
            Ok(Some(arm))
        });
        for (slot, arm) in self.arms.iter_mut().zip(updated) {
            if let Some(arm) = arm? {
                *slot = arm;
            }
        }
        Ok(())
    }

    pub fn fingerprint(&self, out: &mut Vec<f64>) {
        for a in &self.arms {
            out.extend_from_slice(a.parameters());
        }
    }
}

impl ItemScorer for PerArmModels {
    fn score_items(&self, context: &[f64], items: &[ItemIndex]) -> Vec<f64> {
        items
            .iter()
            .map(|&i| {
                self.arms[i]
                    .score_context(context)
                    .expect("context dimension")
            })
            .collect()
    }
}

/// `m` per-arm logistic models per arm, each trained on a Poisson(1)
/// reweighting of the data (online bootstrap).
#[derive(Debug, Clone)]
pub struct BootstrapEnsembles {
    members: Vec<Vec<Scorer>>,
}

impl BootstrapEnsembles {
    pub fn new(n_arms: usize, context_dim: usize, members: usize) -> Self {
        Self {
            members: vec![vec![Scorer::linear(context_dim, 0); members]; n_arms],
        }
    }

    /// Builds ensembles from explicit members (arm x member).
    pub fn from_members(members: Vec<Vec<Scorer>>) -> Self {
        Self { members }
    }

    pub fn n_arms(&self) -> usize {
        self.members.len()
    }

    pub fn n_members(&self) -> usize {
        self.members.first().map_or(0, Vec::len)
    }

    pub fn member_scores(&self, context: &[f64], item: ItemIndex) -> Vec<f64> {
        self.members[item]
            .iter()
            .map(|m| m.score_context(context).expect("context dimension"))
            .collect()
    }

    /// One weighted gradient step per member. Weights are drawn up front in
    /// (arm, member, entry) order so the result does not depend on `exec`.
    pub fn train<R: Rng + ?Sized>(
        &mut self,
        batch: &[ReplayEntry],
        learning_rate: f64,
        rng: &mut R,
        exec: Exec,
    ) -> Result<()> {
        let groups = group_by_arm(batch, self.members.len());
        let poisson = Poisson::new(1.0).expect("positive rate");
        let weights: Vec<Vec<Vec<f64>>> = groups
            .iter()
            .zip(&self.members)
            .map(|(g, members)| {
                members
                    .iter()
                    .map(|_| g.iter().map(|_| poisson.sample(rng)).collect())
                    .collect()
            })
            .collect();
        let updated = par::map_indexed(
            exec,
            self.members.len(),
            |a| -> Result<Option<Vec<Scorer>>> {
                if groups[a].is_empty() {
                    return Ok(None);
                }
                let mut members = self.members[a].clone();
                for (member, w) in members.iter_mut().zip(&weights[a]) {
                    member.sgd_update_with(&groups[a], Some(w), learning_rate, Exec::Sequential)?;
                }
                Ok(Some(members))
            },
        );
        for (slot, members) in self.members.iter_mut().zip(updated) {
            if let Some(members) = members? {
                *slot = members;
            }
        }
        Ok(())
    }

    pub fn fingerprint(&self, out: &mut Vec<f64>) {
        for arm in &self.members {
            for m in arm {
                out.extend_from_slice(m.parameters());
            }
        }
    }
}
