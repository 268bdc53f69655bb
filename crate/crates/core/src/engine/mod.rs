//! Per-trial pipeline, update schedule and replay evaluation.

mod metrics;
mod replay;

pub use metrics::{
    compute_avg_ctr, compute_ctr, compute_precision_at_k, item_counts, per_item_ctr,
    relative_ctr_series, Clicks, SeriesPoint,
};
pub use replay::{eval_start, run_replay, run_replay_with, MetricsReport, ReplayRun};

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::{
    candidate_items, recluster_with, ClusterModel, DbscanSettings, ItemProfiles,
};
use crate::dataio::EncodedTrial;
use crate::models::{sample_minibatch, ReplayBuffer, ReplayEntry, Scorer, UpdateSchedule};
use crate::par::Exec;
use crate::policies::{
    active_explorer_select, bootstrap_select, epsilon_greedy_select, fee_select, random_select,
    static_select, BootstrapEnsembles, BootstrapMode, DbgdState, PerArmModels, PolicyConfig,
    PolicyId, Slate,
};
use crate::{Error, ItemIndex, Result};

/// Everything that determines one replay run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub k: usize,
    pub policy: PolicyId,
    pub policy_config: PolicyConfig,
    pub clustering_enabled: bool,
    pub dbscan: DbscanSettings,
    pub schedule: UpdateSchedule,
    pub hidden_layers: Vec<usize>,
    pub learning_rate: f64,
    pub warmup_trials: usize,
    pub eval_fraction: f64,
    pub series_window: usize,
    pub seed: u64,
}

impl EngineConfig {
    /// Defaults for `policy`; clustering is on only for the policy that
    /// requires it.
    pub fn new(policy: PolicyId, k: usize, seed: u64) -> Self {
        Self {
            k,
            policy,
            policy_config: PolicyConfig::default(),
            clustering_enabled: policy.forces_clustering(),
            dbscan: DbscanSettings::default(),
            schedule: UpdateSchedule::default(),
            hidden_layers: vec![64, 32],
            learning_rate: 0.1,
            warmup_trials: 5000,
            eval_fraction: 0.3,
            series_window: 1000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("engine.k must be at least 1"));
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return Err(Error::config("engine.eval_fraction must lie in (0, 1)"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(
                "models.learning_rate must be finite and positive",
            ));
        }
        if self.series_window == 0 {
            return Err(Error::config("engine.series_window must be positive"));
        }
        if self.hidden_layers.contains(&0) {
            return Err(Error::config(
                "models.hidden_layers widths must be positive",
            ));
        }
        self.policy_config.validate()?;
        self.dbscan.validate()?;
        self.schedule.validate()
    }
}

/// Result of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub index: usize,
    pub slate: Slate,
    pub reward: u8,
    pub hit_slot: Option<usize>,
    pub candidates_scored: usize,
}

impl Clicks for TrialOutcome {
    fn shown(&self) -> &[ItemIndex] {
        &self.slate.items
    }

    fn clicked(&self, item: ItemIndex) -> bool {
        self.hit_slot.is_some_and(|s| self.slate.items[s] == item)
    }

    fn n_clicks(&self) -> usize {
        usize::from(self.hit_slot.is_some())
    }
}

#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
enum PolicyState {
    Random,
    Static(Scorer),
    PerArm(PerArmModels),
    Bootstrap(BootstrapEnsembles, BootstrapMode),
    Dbgd(DbgdState),
}

// Distinct streams derived from the run seed.
const POLICY_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const TRAIN_STREAM: u64 = 0xd1b5_4a32_d192_ed03;
const INIT_STREAM: u64 = 0x94d0_49bb_1331_11eb;
const DBGD_STREAM: u64 = 0xbf58_476d_1ce4_e5b9;

/// Online engine over a fixed item vocabulary.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    n_items: usize,
    context_dim: usize,
    train_len: usize,
    policy: PolicyState,
    buffer: ReplayBuffer,
    supervised: ReplayBuffer,
    profiles: ItemProfiles,
    pending_hits: Vec<(ItemIndex, Arc<[f64]>)>,
    clusters: Option<ClusterModel>,
    policy_rng: ChaCha8Rng,
    train_rng: ChaCha8Rng,
    trials_seen: usize,
    exec: Exec,
}

impl Engine {
    /// `stream_len` fixes the static policy's training cut.
    pub fn new(
        config: EngineConfig,
        n_items: usize,
        context_dim: usize,
        stream_len: usize,
    ) -> Result<Self> {
        config.validate()?;
        if n_items < config.k {
            return Err(Error::InsufficientItems {
                needed: config.k,
                available: n_items,
            });
        }
        let seed = config.seed;
        let mut init_rng = ChaCha8Rng::seed_from_u64(seed ^ INIT_STREAM);
        let pc = &config.policy_config;
        let policy = match config.policy {
            PolicyId::Random => PolicyState::Random,
            PolicyId::StaticLr => PolicyState::Static(Scorer::linear(context_dim, n_items)),
            PolicyId::EGreedy | PolicyId::Fee | PolicyId::Ae => {
                PolicyState::PerArm(PerArmModels::new(n_items, context_dim))
            }
            PolicyId::BUcb | PolicyId::BTs => {
                let mode = if config.policy == PolicyId::BUcb {
                    BootstrapMode::Ucb
                } else {
                    BootstrapMode::Ts
                };
                PolicyState::Bootstrap(
                    BootstrapEnsembles::new(n_items, context_dim, pc.bootstrap_members),
                    mode,
                )
            }
            PolicyId::DbLr | PolicyId::DbMlp | PolicyId::DbscanDbMlp => {
                let scorer = if config.policy == PolicyId::DbLr {
                    Scorer::linear(context_dim, n_items)
                } else {
                    Scorer::mlp(context_dim, n_items, &config.hidden_layers, &mut init_rng)?
                };
                PolicyState::Dbgd(DbgdState::new(
                    scorer,
                    pc.dbgd_delta,
                    pc.dbgd_beta,
                    seed ^ DBGD_STREAM,
                )?)
            }
        };
        Ok(Self {
            n_items,
            context_dim,
            train_len: stream_len - eval_len(stream_len, config.eval_fraction),
            policy,
            buffer: ReplayBuffer::new(config.schedule.buffer_capacity),
            supervised: ReplayBuffer::new(None),
            profiles: ItemProfiles::new(),
            pending_hits: Vec::new(),
            clusters: None,
            policy_rng: ChaCha8Rng::seed_from_u64(seed ^ POLICY_STREAM),
            train_rng: ChaCha8Rng::seed_from_u64(seed ^ TRAIN_STREAM),
            trials_seen: 0,
            exec: Exec::default(),
            config,
        })
    }

    /// Execution mode for within-trial and within-batch work. Results do not
    /// depend on it.
    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn trials_seen(&self) -> usize {
        self.trials_seen
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    pub fn cluster_model(&self) -> Option<&ClusterModel> {
        self.clusters.as_ref()
    }

    pub fn profiles(&self) -> &ItemProfiles {
        &self.profiles
    }

    /// The DBGD exploit scorer, if the policy has one.
    pub fn dbgd_state(&self) -> Option<&DbgdState> {
        match &self.policy {
            PolicyState::Dbgd(s) => Some(s),
            _ => None,
        }
    }

    /// Every learned parameter of the policy, in a fixed order.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        match &self.policy {
            PolicyState::Random => {}
            PolicyState::Static(s) => out.extend_from_slice(s.parameters()),
            PolicyState::PerArm(m) => m.fingerprint(&mut out),
            PolicyState::Bootstrap(e, _) => e.fingerprint(&mut out),
            PolicyState::Dbgd(s) => out.extend_from_slice(s.exploit.parameters()),
        }
        out
    }

    /// Hash of the bit patterns of [`Engine::parameters`].
    pub fn parameter_fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        for p in self.parameters() {
            p.to_bits().hash(&mut h);
        }
        h.finish()
    }

    fn in_warmup(&self, t: usize) -> bool {
        t < self.config.warmup_trials
    }

    /// Runs one trial: update point (if due), candidates, slate, reward,
    /// feedback and bookkeeping.
    pub fn step(&mut self, trial: &EncodedTrial) -> Result<TrialOutcome> {
        if trial.context.len() != self.context_dim {
            return Err(Error::DimensionMismatch {
                expected: self.context_dim,
                got: trial.context.len(),
            });
        }
        if trial.chosen_item >= self.n_items {
            return Err(Error::UnknownItem(trial.chosen_item.to_string()));
        }
        let t = self.trials_seen;
        if t > 0 && t.is_multiple_of(self.config.schedule.interval_trials) {
            self.update(t)?;
        }
        if self.config.policy.is_static() && t == self.train_len {
            self.train_static()?;
        }

        let k = self.config.k;
        let context = &trial.context;
        let candidates = if self.config.clustering_enabled && !self.in_warmup(t) {
            candidate_items(context, self.clusters.as_ref(), self.n_items, k)
        } else {
            (0..self.n_items).collect()
        };

        let (slate, direction) = self.select(t, context, &candidates)?;
        let hit_slot = slate.position(trial.chosen_item);

        let warm = self.in_warmup(t);
        if let (PolicyState::Dbgd(state), Some(u), false) = (&mut self.policy, &direction, warm) {
            state.feedback(&slate, hit_slot, u);
        }

        let shared: Arc<[f64]> = Arc::from(context.as_slice());
        for (slot, &item) in slate.items.iter().enumerate() {
            self.buffer.push(ReplayEntry::new(
                Arc::clone(&shared),
                item,
                hit_slot == Some(slot),
            ));
        }
        let supervised_until = if self.config.policy.is_static() {
            self.train_len
        } else {
            self.config.warmup_trials
        };
        if t < supervised_until {
            self.push_supervised(&shared, trial.chosen_item);
        }
        if hit_slot.is_some() {
            self.pending_hits
                .push((trial.chosen_item, Arc::clone(&shared)));
        }

        self.trials_seen += 1;
        Ok(TrialOutcome {
            index: trial.index,
            reward: u8::from(hit_slot.is_some()),
            hit_slot,
            candidates_scored: candidates.len(),
            slate,
        })
    }

    fn push_supervised(&mut self, context: &Arc<[f64]>, chosen: ItemIndex) {
        self.supervised
            .push(ReplayEntry::new(Arc::clone(context), chosen, true));
        if self.n_items > 1 {
            let mut negative = self.train_rng.random_range(0..self.n_items - 1);
            if negative >= chosen {
                negative += 1;
            }
            self.supervised
                .push(ReplayEntry::new(Arc::clone(context), negative, false));
        }
    }

    fn select(
        &mut self,
        t: usize,
        context: &[f64],
        candidates: &[ItemIndex],
    ) -> Result<(Slate, Option<Vec<f64>>)> {
        let (k, n) = (self.config.k, self.n_items);
        let pc = self.config.policy_config;
        let rng = &mut self.policy_rng;
        let slate = match &mut self.policy {
            PolicyState::Random => random_select(candidates, k, n, rng),
            PolicyState::Static(s) => static_select(s, context, candidates, k, n),
            PolicyState::PerArm(arms) => match self.config.policy {
                PolicyId::EGreedy => {
                    epsilon_greedy_select(arms, context, candidates, k, n, pc.epsilon, rng)
                }
                PolicyId::Fee => fee_select(
                    t,
                    pc.fee_explore_trials,
                    arms,
                    context,
                    candidates,
                    k,
                    n,
                    rng,
                ),
                _ => active_explorer_select(
                    arms,
                    context,
                    candidates,
                    k,
                    n,
                    pc.ae_uncertainty_share,
                    rng,
                ),
            },
            PolicyState::Bootstrap(ens, mode) => bootstrap_select(
                *mode,
                ens,
                context,
                candidates,
                k,
                n,
                pc.ucb_percentile,
                rng,
            ),
            PolicyState::Dbgd(state) => {
                let proposal = state.propose();
                let slate = state.select(&proposal, context, candidates, k, n)?;
                return Ok((slate, Some(proposal.direction)));
            }
        };
        Ok((slate, None))
    }

    /// Scheduled update at trial `t`: minibatch steps, then profile refresh
    /// and reclustering.
    fn update(&mut self, t: usize) -> Result<()> {
        let warm = t <= self.config.warmup_trials && !self.supervised.is_empty();
        let source = if warm { &self.supervised } else { &self.buffer };
        if !source.is_empty()
            && !matches!(self.policy, PolicyState::Random | PolicyState::Static(_))
        {
            let lr = self.config.learning_rate;
            for _ in 0..self.config.schedule.steps_per_update {
                let batch = sample_minibatch(
                    source,
                    self.config.schedule.minibatch_size,
                    &mut self.train_rng,
                )?;
                match &mut self.policy {
                    PolicyState::PerArm(arms) => arms.train(&batch, lr, self.exec)?,
                    PolicyState::Bootstrap(ens, _) => {
                        ens.train(&batch, lr, &mut self.train_rng, self.exec)?
                    }
                    PolicyState::Dbgd(state) => {
                        state.exploit.sgd_update_with(&batch, None, lr, self.exec)?;
                    }
                    PolicyState::Random | PolicyState::Static(_) => unreachable!(),
                }
            }
        }
        if !self.config.policy.is_static() && t >= self.config.warmup_trials {
            self.supervised = ReplayBuffer::new(None);
        }

        for (item, context) in self.pending_hits.drain(..) {
            self.profiles.add_hit(item, &context);
        }
        if self.config.clustering_enabled {
            self.clusters = Some(recluster_with(
                &self.profiles,
                &self.config.dbscan,
                self.n_items,
                self.exec,
            ));
        }
        Ok(())
    }

    /// One-off supervised fit on the trials before the evaluation window.
    fn train_static(&mut self) -> Result<()> {
        let PolicyState::Static(scorer) = &mut self.policy else {
            return Ok(());
        };
        if self.supervised.is_empty() {
            return Ok(());
        }
        let schedule = self.config.schedule;
        let rounds = (self.train_len / schedule.interval_trials).max(1);
        for _ in 0..rounds * schedule.steps_per_update {
            let batch = sample_minibatch(
                &self.supervised,
                schedule.minibatch_size,
                &mut self.train_rng,
            )?;
            scorer.sgd_update_with(&batch, None, self.config.learning_rate, self.exec)?;
        }
        self.supervised = ReplayBuffer::new(None);
        Ok(())
    }
}

/// Length of the evaluation window at the end of a stream of `n` trials.
pub(crate) fn eval_len(n: usize, fraction: f64) -> usize {
    if n == 0 {
        return 0;
    }
    ((n as f64 * fraction).round() as usize).clamp(1, n)
}
