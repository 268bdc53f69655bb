//! Interaction-log ingestion: schema fitting, context encoding, replay
//! ordering and synthetic log generation.

mod csvlog;
mod schema;
mod stream;
mod synthetic;

pub use csvlog::{
    read_csv, read_csv_from, write_csv, write_csv_to, CHOSEN_ITEM, TIMESTAMP, USER_ID,
};
pub use schema::{
    fit_schema, CategoricalField, ContinuousField, EncodedTrial, Encoder, FeatureSchema,
    RawInteraction,
};
pub use stream::{stream, TrialStream};
pub use synthetic::{
    generate_synthetic, SegmentEncoding, SyntheticEnvSpec, SyntheticGenerator, SyntheticTrial,
};
