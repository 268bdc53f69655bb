//! Click-probability base scorers (logistic regression and a small MLP),
//! the replay buffer behind partial batch updates, and scorer checkpoints.

mod checkpoint;
mod replay;
mod scorer;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CheckpointMeta,
};
pub use replay::{sample_minibatch, ReplayBuffer, ReplayEntry, UpdateSchedule};
pub use scorer::{gradient_check, ItemScorer, Scorer, ScorerKind, PROB_CLAMP};
