//! Dense feed-forward scorer over `context ⊕ one_hot(item)`.
//!
//! A linear scorer is the degenerate network with no hidden layer, so both
//! kinds share one flat parameter vector, one forward pass and one
//! backward pass. Layer `l` stores its `out x in` weights row-major followed
//! by its `out` biases. Hidden units are rectified-linear; the single
//! output goes through a sigmoid.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ReplayEntry;
use crate::par::{self, Exec};
use crate::{Error, ItemIndex, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside the
/// cross-entropy so the loss stays finite.
pub const PROB_CLAMP: f64 = 1e-12;

/// Entries per gradient chunk. Fixed so parallel and sequential updates
/// sum in the same order.
const GRAD_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    Linear,
    Mlp,
}

/// Anything that can score a set of items for one context.
pub trait ItemScorer {
    fn score_items(&self, context: &[f64], items: &[ItemIndex]) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scorer {
    kind: ScorerKind,
    context_dim: usize,
    item_slots: usize,
    widths: Vec<usize>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn bce(p: f64, label: f64) -> f64 {
    let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    -(label * p.ln() + (1.0 - label) * (1.0 - p).ln())
}

impl Scorer {
    /// Builds a scorer with all parameters zero. `item_slots = 0` gives a
    /// context-only model (used for per-arm baselines).
    pub fn zeroed(
        kind: ScorerKind,
        context_dim: usize,
        item_slots: usize,
        hidden: &[usize],
    ) -> Result<Self> {
        let input = context_dim + item_slots;
        if input == 0 {
            return Err(Error::config("scorer input dimension must be positive"));
        }
        let hidden: &[usize] = match kind {
            ScorerKind::Linear => &[],
            ScorerKind::Mlp => hidden,
        };
        if hidden.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        let mut widths = vec![input];
        widths.extend_from_slice(hidden);
        widths.push(1);
        let mut offsets = Vec::with_capacity(widths.len() - 1);
        let mut total = 0;
        for w in widths.windows(2) {
            offsets.push(total);
            total += w[0] * w[1] + w[1];
        }
        Ok(Self {
            kind,
            context_dim,
            item_slots,
            widths,
            offsets,
            params: vec![0.0; total],
        })
    }

    pub fn linear(context_dim: usize, item_slots: usize) -> Self {
        Self::zeroed(ScorerKind::Linear, context_dim, item_slots, &[])
            .expect("positive input dimension")
    }

    /// MLP with Glorot-uniform weights and zero biases.
    pub fn mlp<R: Rng + ?Sized>(
        context_dim: usize,
        item_slots: usize,
        hidden: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let mut scorer = Self::zeroed(ScorerKind::Mlp, context_dim, item_slots, hidden)?;
        scorer.glorot_init(rng);
        Ok(scorer)
    }

    pub fn glorot_init<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for l in 0..self.n_layers() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let start = self.offsets[l];
            for w in &mut self.params[start..start + fan_in * fan_out] {
                *w = rng.random_range(-limit..=limit);
            }
            for b in &mut self.params[start + fan_in * fan_out..start + fan_in * fan_out + fan_out]
            {
                *b = 0.0;
            }
        }
    }

    pub fn kind(&self) -> ScorerKind {
        self.kind
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn item_slots(&self) -> usize {
        self.item_slots
    }

    /// Layer widths `[input, hidden.., 1]`.
    pub fn architecture(&self) -> &[usize] {
        &self.widths
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn parameters(&self) -> &[f64] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::LengthMismatch {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn check_input(&self, context: &[f64], item: Option<ItemIndex>) -> Result<()> {
        if context.len() != self.context_dim {
            return Err(Error::DimensionMismatch {
                expected: self.context_dim,
                got: context.len(),
            });
        }
        match item {
            Some(i) if i >= self.item_slots => Err(Error::DimensionMismatch {
                expected: self.item_slots,
                got: i + 1,
            }),
            None if self.item_slots > 0 => Err(Error::DimensionMismatch {
                expected: self.item_slots,
                got: 0,
            }),
            _ => Ok(()),
        }
    }

    /// Click probability for `context ⊕ one_hot(item)`.
    pub fn score(&self, context: &[f64], item: ItemIndex) -> Result<f64> {
        self.check_input(context, Some(item))?;
        Ok(self.forward(context, Some(item)))
    }

    /// Click probability for a context-only scorer.
    pub fn score_context(&self, context: &[f64]) -> Result<f64> {
        self.check_input(context, None)?;
        Ok(self.forward(context, None))
    }

    fn item_of(&self, item: ItemIndex) -> Option<ItemIndex> {
        (self.item_slots > 0).then_some(item)
    }

    /// First-layer pre-activations from the context part of the input.
    fn context_preactivation(&self, context: &[f64]) -> Vec<f64> {
        let (input, out) = (self.widths[0], self.widths[1]);
        let w = &self.params[..input * out];
        let b = &self.params[input * out..input * out + out];
        (0..out)
            .map(|o| {
                let row = &w[o * input..o * input + self.context_dim];
                b[o] + row.iter().zip(context).map(|(a, x)| a * x).sum::<f64>()
            })
            .collect()
    }

    /// Runs the rest of the network from first-layer pre-activations.
    fn finish(&self, pre0: &mut [f64], item: Option<ItemIndex>, scratch: &mut Vec<f64>) -> f64 {
        let input = self.widths[0];
        if let Some(item) = item {
            let col = self.context_dim + item;
            for (o, z) in pre0.iter_mut().enumerate() {
                *z += self.params[o * input + col];
            }
        }
        if self.n_layers() == 1 {
            return sigmoid(pre0[0]);
        }
        let mut act: Vec<f64> = pre0.iter().map(|z| z.max(0.0)).collect();
        for l in 1..self.n_layers() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let start = self.offsets[l];
            let w = &self.params[start..start + fan_in * fan_out];
            let b = &self.params[start + fan_in * fan_out..start + fan_in * fan_out + fan_out];
            scratch.clear();
            scratch.extend((0..fan_out).map(|o| {
                b[o] + w[o * fan_in..(o + 1) * fan_in]
                    .iter()
                    .zip(&act)
                    .map(|(a, x)| a * x)
                    .sum::<f64>()
            }));
            if l + 1 == self.n_layers() {
                return sigmoid(scratch[0]);
            }
            act.clear();
            act.extend(scratch.iter().map(|z| z.max(0.0)));
        }
        unreachable!("network has an output layer")
    }

    fn forward(&self, context: &[f64], item: Option<ItemIndex>) -> f64 {
        let mut pre0 = self.context_preactivation(context);
        self.finish(&mut pre0, item, &mut Vec::new())
    }

    /// Scores several items for one context, sharing the context half of
    /// the first layer.
    pub fn score_items_with(&self, context: &[f64], items: &[ItemIndex], exec: Exec) -> Vec<f64> {
        assert_eq!(context.len(), self.context_dim, "context dimension");
        assert!(
            items.iter().all(|&i| i < self.item_slots),
            "item index out of range"
        );
        let base = self.context_preactivation(context);
        if exec.is_parallel() && items.len() >= 256 {
            par::map_slice(exec, items, |&item| {
                self.finish(&mut base.clone(), Some(item), &mut Vec::new())
            })
        } else {
            let mut pre = base.clone();
            let mut scratch = Vec::new();
            items
                .iter()
                .map(|&item| {
                    pre.copy_from_slice(&base);
                    self.finish(&mut pre, Some(item), &mut scratch)
                })
                .collect()
        }
    }

    /// Adds `weight * ∂loss/∂params` for one example into `grad` and returns
    /// `weight * loss`.
    fn accumulate_gradient(
        &self,
        context: &[f64],
        item: Option<ItemIndex>,
        label: f64,
        weight: f64,
        grad: &mut [f64],
    ) -> f64 {
        let n_layers = self.n_layers();
        // acts[l] = input to layer l; pres[l] = pre-activation of layer l
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        let mut pres: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        let mut pre0 = self.context_preactivation(context);
        let input = self.widths[0];
        if let Some(item) = item {
            for (o, z) in pre0.iter_mut().enumerate() {
                *z += self.params[o * input + self.context_dim + item];
            }
        }
        pres.push(pre0);
        for l in 1..n_layers {
            let act: Vec<f64> = pres[l - 1].iter().map(|z| z.max(0.0)).collect();
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let start = self.offsets[l];
            let w = &self.params[start..start + fan_in * fan_out];
            let b = &self.params[start + fan_in * fan_out..start + fan_in * fan_out + fan_out];
            let pre = (0..fan_out)
                .map(|o| {
                    b[o] + w[o * fan_in..(o + 1) * fan_in]
                        .iter()
                        .zip(&act)
                        .map(|(a, x)| a * x)
                        .sum::<f64>()
                })
                .collect();
            acts.push(act);
            pres.push(pre);
        }
        let p = sigmoid(pres[n_layers - 1][0]);
        let loss = bce(p, label);

        let mut delta = vec![p - label];
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let start = self.offsets[l];
            let (gw, gb) =
                grad[start..start + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
            for o in 0..fan_out {
                gb[o] += weight * delta[o];
            }
            if l == 0 {
                for o in 0..fan_out {
                    let d = weight * delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut gw[o * fan_in..(o + 1) * fan_in];
                    for (g, x) in row[..self.context_dim].iter_mut().zip(context) {
                        *g += d * x;
                    }
                    if let Some(item) = item {
                        row[self.context_dim + item] += d;
                    }
                }
                break;
            }
            let act = &acts[l - 1];
            let w = &self.params[start..start + fan_in * fan_out];
            let mut next = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let grow = &mut gw[o * fan_in..(o + 1) * fan_in];
                for i in 0..fan_in {
                    grow[i] += weight * d * act[i];
                    next[i] += d * row[i];
                }
            }
            for (n, z) in next.iter_mut().zip(&pres[l - 1]) {
                if *z <= 0.0 {
                    *n = 0.0;
                }
            }
            delta = next;
        }
        weight * loss
    }

    /// Mean binary cross-entropy over `batch` (context-only scorers ignore
    /// the entry item).
    pub fn loss(&self, batch: &[ReplayEntry]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|e| bce(self.forward(&e.context, self.item_of(e.item)), e.label()))
            .sum();
        total / batch.len().max(1) as f64
    }

    /// Analytic gradient of the loss for a single example.
    pub fn gradient(&self, entry: &ReplayEntry) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        self.accumulate_gradient(
            &entry.context,
            self.item_of(entry.item),
            entry.label(),
            1.0,
            &mut grad,
        );
        grad
    }

    /// One gradient step on the mean cross-entropy of `batch`; returns the
    /// loss before the step.
    pub fn sgd_update(&mut self, batch: &[ReplayEntry], learning_rate: f64) -> Result<f64> {
        self.sgd_update_with(batch, None, learning_rate, Exec::default())
    }

    /// Weighted variant: each example's loss is multiplied by its weight and
    /// the step uses the weighted mean. A batch whose weights are all zero
    /// leaves the parameters unchanged.
    pub fn sgd_update_with(
        &mut self,
        batch: &[ReplayEntry],
        weights: Option<&[f64]>,
        learning_rate: f64,
        exec: Exec,
    ) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if let Some(w) = weights {
            if w.len() != batch.len() {
                return Err(Error::LengthMismatch {
                    expected: batch.len(),
                    got: w.len(),
                });
            }
        }
        for e in batch {
            self.check_input(&e.context, self.item_of(e.item))?;
        }
        let weight_of = |i: usize| weights.map_or(1.0, |w| w[i]);
        let total_weight: f64 = (0..batch.len()).map(weight_of).sum();
        let dim = self.params.len() + 1;
        let this = &*self;
        // last slot carries the weighted loss
        let sums = par::chunked_sum(exec, batch.len(), GRAD_CHUNK, dim, |range, acc| {
            let (grad, loss) = acc.split_at_mut(dim - 1);
            for i in range {
                let e = &batch[i];
                let w = weight_of(i);
                if w == 0.0 {
                    continue;
                }
                loss[0] +=
                    this.accumulate_gradient(&e.context, this.item_of(e.item), e.label(), w, grad);
            }
        });
        if total_weight <= 0.0 {
            return Ok(self.loss(batch));
        }
        let mean_loss = sums[dim - 1] / total_weight;
        let step = learning_rate / total_weight;
        for (p, g) in self.params.iter_mut().zip(&sums[..dim - 1]) {
            *p -= step * g;
        }
        Ok(mean_loss)
    }
}

impl ItemScorer for Scorer {
    fn score_items(&self, context: &[f64], items: &[ItemIndex]) -> Vec<f64> {
        self.score_items_with(context, items, Exec::default())
    }
}

/// Largest relative disagreement between the analytic gradient and central
/// finite differences with step `h`, over every parameter.
pub fn gradient_check(scorer: &Scorer, entry: &ReplayEntry, h: f64) -> f64 {
    let analytic = scorer.gradient(entry);
    let item = scorer.item_of(entry.item);
    let mut probe = scorer.clone();
    let mut worst = 0.0f64;
    for (i, a) in analytic.iter().enumerate() {
        let original = probe.params[i];
        probe.params[i] = original + h;
        let up = bce(probe.forward(&entry.context, item), entry.label());
        probe.params[i] = original - h;
        let down = bce(probe.forward(&entry.context, item), entry.label());
        probe.params[i] = original;
        let numeric = (up - down) / (2.0 * h);
        let rel = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    worst
}
