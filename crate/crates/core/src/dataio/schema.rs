use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::{Error, ItemIndex, Result};

/// One logged interaction. Feature cells keep their raw text; whether a
/// field is categorical or continuous is decided when the schema is fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInteraction {
    pub user_id: String,
    /// Milliseconds.
    pub timestamp: i64,
    pub features: BTreeMap<String, String>,
    pub chosen_item: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalField {
    pub name: String,
    pub vocabulary: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousField {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

/// Fitted encoding: one-hot blocks for categorical fields (in field-name
/// order) followed by one min-max scaled slot per continuous field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub categorical_fields: Vec<CategoricalField>,
    pub continuous_fields: Vec<ContinuousField>,
    pub item_vocabulary: Vec<String>,
    pub context_dim: usize,
}

/// A trial ready for the engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedTrial {
    /// Position in the replay stream.
    pub index: usize,
    pub timestamp: i64,
    pub context: Vec<f64>,
    pub chosen_item: ItemIndex,
}

fn parse_numeric(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Fits vocabularies (sorted lexicographically) and continuous ranges over
/// the whole log. A field is continuous iff every observed value parses as
/// a finite number.
pub fn fit_schema(raws: &[RawInteraction]) -> Result<FeatureSchema> {
    if raws.is_empty() {
        return Err(Error::EmptyLog);
    }
    #[derive(Default)]
    struct Observed {
        strings: BTreeSet<String>,
        numeric: usize,
        textual: usize,
        min: f64,
        max: f64,
    }
    let mut fields: BTreeMap<&str, Observed> = BTreeMap::new();
    let mut items = BTreeSet::new();
    for raw in raws {
        items.insert(raw.chosen_item.clone());
        for (name, value) in &raw.features {
            let obs = fields.entry(name).or_insert_with(|| Observed {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
                ..Default::default()
            });
            match parse_numeric(value) {
                Some(v) => {
                    obs.numeric += 1;
                    obs.min = obs.min.min(v);
                    obs.max = obs.max.max(v);
                }
                None => obs.textual += 1,
            }
            obs.strings.insert(value.clone());
        }
    }

    let mut categorical_fields = Vec::new();
    let mut continuous_fields = Vec::new();
    for (name, obs) in fields {
        match (obs.numeric > 0, obs.textual > 0) {
            (true, true) => return Err(Error::MixedType(name.to_string())),
            (true, false) => continuous_fields.push(ContinuousField {
                name: name.to_string(),
                min: obs.min,
                max: obs.max,
            }),
            _ => categorical_fields.push(CategoricalField {
                name: name.to_string(),
                vocabulary: obs.strings.into_iter().collect(),
            }),
        }
    }
    let context_dim = categorical_fields
        .iter()
        .map(|f| f.vocabulary.len())
        .sum::<usize>()
        + continuous_fields.len();
    Ok(FeatureSchema {
        categorical_fields,
        continuous_fields,
        item_vocabulary: items.into_iter().collect(),
        context_dim,
    })
}

impl FeatureSchema {
    pub fn n_items(&self) -> usize {
        self.item_vocabulary.len()
    }

    pub fn item_index(&self, item: &str) -> Option<ItemIndex> {
        self.item_vocabulary
            .binary_search_by(|v| v.as_str().cmp(item))
            .ok()
    }

    /// Offset of each categorical block inside the context vector.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut offset = 0;
        self.categorical_fields
            .iter()
            .map(|f| {
                let start = offset;
                offset += f.vocabulary.len();
                start
            })
            .collect()
    }

    /// Recovers the categorical values from an encoded context; `None`
    /// for all-zero (unseen) blocks.
    pub fn decode_categorical(&self, context: &[f64]) -> Vec<Option<String>> {
        self.categorical_fields
            .iter()
            .zip(self.block_offsets())
            .map(|(field, start)| {
                let block = &context[start..start + field.vocabulary.len()];
                block
                    .iter()
                    .position(|&v| v == 1.0)
                    .map(|i| field.vocabulary[i].clone())
            })
            .collect()
    }
}

/// Encodes raw rows against a fitted schema. Safe to share across threads;
/// the unseen-category counter is atomic.
#[derive(Debug)]
pub struct Encoder {
    schema: FeatureSchema,
    unknown_categories: AtomicU64,
}

impl Encoder {
    pub fn new(schema: FeatureSchema) -> Self {
        Self {
            schema,
            unknown_categories: AtomicU64::new(0),
        }
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    /// Number of categorical values seen during encoding that were not in
    /// the fitted vocabulary.
    pub fn unknown_categories(&self) -> u64 {
        self.unknown_categories.load(Ordering::Relaxed)
    }

    pub fn encode(&self, raw: &RawInteraction) -> Result<EncodedTrial> {
        let schema = &self.schema;
        let mut context = vec![0.0; schema.context_dim];
        let mut offset = 0;
        for field in &schema.categorical_fields {
            let value = raw
                .features
                .get(&field.name)
                .ok_or_else(|| Error::MissingField(field.name.clone()))?;
            match field.vocabulary.binary_search(value) {
                Ok(i) => context[offset + i] = 1.0,
                Err(_) => {
                    self.unknown_categories.fetch_add(1, Ordering::Relaxed);
                    log::debug!("unseen value {value:?} for field {}", field.name);
                }
            }
            offset += field.vocabulary.len();
        }
        for field in &schema.continuous_fields {
            let value = raw
                .features
                .get(&field.name)
                .ok_or_else(|| Error::MissingField(field.name.clone()))?;
            let v = parse_numeric(value).ok_or_else(|| Error::MixedType(field.name.clone()))?;
            context[offset] = scale(v, field.min, field.max);
            offset += 1;
        }
        let chosen_item = schema
            .item_index(&raw.chosen_item)
            .ok_or_else(|| Error::UnknownItem(raw.chosen_item.clone()))?;
        Ok(EncodedTrial {
            index: 0,
            timestamp: raw.timestamp,
            context,
            chosen_item,
        })
    }

    pub fn encode_all(&self, raws: &[RawInteraction]) -> Result<Vec<EncodedTrial>> {
        raws.iter()
            .enumerate()
            .map(|(i, raw)| {
                let mut trial = self.encode(raw)?;
                trial.index = i;
                Ok(trial)
            })
            .collect()
    }
}

fn scale(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.5
    }
}
