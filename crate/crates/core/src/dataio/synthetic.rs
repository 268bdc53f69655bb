//! Synthetic interaction logs with latent user segments.
//!
//! Each trial draws a segment uniformly, emits features correlated with
//! that segment (every segment has a "home" value per categorical field and
//! a mean per continuous field) and samples the chosen item from the
//! segment's preference row. With `drift_period` set, the item columns of
//! the preference matrix are re-permuted every `drift_period` trials.
//!
//! [`SegmentEncoding::Modular`] hides the segment in a feature conjunction
//! instead: categorical values are uniform except that their sum modulo the
//! segment count equals the segment, so no single categorical field carries
//! any signal. Continuous fields keep their per-segment means in both modes.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::RawInteraction;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticEnvSpec {
    pub n_items: usize,
    /// Vocabulary size of each categorical field.
    pub categorical_sizes: Vec<usize>,
    pub n_continuous: usize,
    pub n_latent_segments: usize,
    /// Row-stochastic segments x items matrix. Drawn from `seed` when absent.
    #[serde(default)]
    pub segment_preference_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub drift_period: Option<usize>,
    pub seed: u64,
    /// Probability that a categorical field emits a uniformly random value
    /// instead of the segment's home value.
    #[serde(default = "default_feature_noise")]
    pub feature_noise: f64,
    /// Standard deviation of continuous features around the segment mean,
    /// on the unit scale.
    #[serde(default = "default_continuous_noise")]
    pub continuous_noise: f64,
    /// Scale of the log-normal weights used when the matrix is drawn.
    #[serde(default = "default_concentration")]
    pub preference_concentration: f64,
    #[serde(default)]
    pub segment_encoding: SegmentEncoding,
}

/// How the latent segment shows up in the features.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentEncoding {
    /// Each segment has a home value per categorical field and a mean per
    /// continuous field.
    #[default]
    Home,
    /// Sum of categorical value indices modulo `n_latent_segments` equals
    /// the segment; needs at least two categorical fields, the last one with
    /// at least `n_latent_segments` values.
    Modular,
}

fn default_feature_noise() -> f64 {
    0.1
}
fn default_continuous_noise() -> f64 {
    0.1
}
fn default_concentration() -> f64 {
    1.5
}

const BASE_TIMESTAMP_MS: i64 = 1_600_000_000_000;
const CONTINUOUS_RANGE: f64 = 100.0;

impl SyntheticEnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_items == 0 {
            return Err(Error::config("synthetic.n_items must be positive"));
        }
        if self.n_latent_segments == 0 {
            return Err(Error::config(
                "synthetic.n_latent_segments must be positive",
            ));
        }
        if self.categorical_sizes.contains(&0) {
            return Err(Error::config(
                "synthetic.categorical_sizes entries must be positive",
            ));
        }
        if self.drift_period == Some(0) {
            return Err(Error::config("synthetic.drift_period must be positive"));
        }
        if !(0.0..=1.0).contains(&self.feature_noise) {
            return Err(Error::config("synthetic.feature_noise must lie in [0, 1]"));
        }
        if !(self.continuous_noise >= 0.0 && self.continuous_noise.is_finite()) {
            return Err(Error::config(
                "synthetic.continuous_noise must be finite and non-negative",
            ));
        }
        if !(self.preference_concentration >= 0.0 && self.preference_concentration.is_finite()) {
            return Err(Error::config(
                "synthetic.preference_concentration must be finite and non-negative",
            ));
        }
        if self.segment_encoding == SegmentEncoding::Modular {
            let ok = self.categorical_sizes.len() >= 2
                && self
                    .categorical_sizes
                    .last()
                    .is_some_and(|&s| s >= self.n_latent_segments);
            if !ok {
                return Err(Error::config(
                    "synthetic.segment_encoding = \"modular\" needs two or more categorical fields, \
                     the last with at least n_latent_segments values",
                ));
            }
        }
        if let Some(matrix) = &self.segment_preference_matrix {
            if matrix.len() != self.n_latent_segments {
                return Err(Error::config(format!(
                    "synthetic.segment_preference_matrix has {} rows, expected {}",
                    matrix.len(),
                    self.n_latent_segments
                )));
            }
            for (s, row) in matrix.iter().enumerate() {
                if row.len() != self.n_items {
                    return Err(Error::config(format!(
                        "synthetic.segment_preference_matrix row {s} has {} entries, expected {}",
                        row.len(),
                        self.n_items
                    )));
                }
                if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::config(format!(
                        "synthetic.segment_preference_matrix row {s} has a negative or non-finite entry"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::config(format!(
                        "synthetic.segment_preference_matrix row {s} sums to {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A generated row together with its latent segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticTrial {
    pub raw: RawInteraction,
    pub segment: usize,
}

#[derive(Debug, Clone)]
pub struct SyntheticGenerator {
    spec: SyntheticEnvSpec,
    preferences: Vec<Vec<f64>>,
    /// home[s][f]: preferred value of categorical field f for segment s.
    home: Vec<Vec<usize>>,
    /// means[s][c]: mean of continuous field c for segment s, in [0, 1].
    means: Vec<Vec<f64>>,
    item_names: Vec<String>,
}

impl SyntheticGenerator {
    pub fn new(spec: SyntheticEnvSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let preferences = match &spec.segment_preference_matrix {
            Some(m) => m.clone(),
            None => (0..spec.n_latent_segments)
                .map(|_| {
                    let w: Vec<f64> = (0..spec.n_items)
                        .map(|_| {
                            let g: f64 = rng.sample(StandardNormal);
                            (spec.preference_concentration * g).exp()
                        })
                        .collect();
                    let total: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / total).collect()
                })
                .collect(),
        };
        let home = (0..spec.n_latent_segments)
            .map(|_| {
                spec.categorical_sizes
                    .iter()
                    .map(|&size| rng.random_range(0..size))
                    .collect()
            })
            .collect();
        let means = (0..spec.n_latent_segments)
            .map(|_| {
                (0..spec.n_continuous)
                    .map(|_| rng.random::<f64>())
                    .collect()
            })
            .collect();
        let width = (spec.n_items - 1).to_string().len();
        let item_names = (0..spec.n_items)
            .map(|i| format!("item_{i:0width$}"))
            .collect();
        Ok(Self {
            spec,
            preferences,
            home,
            means,
            item_names,
        })
    }

    pub fn spec(&self) -> &SyntheticEnvSpec {
        &self.spec
    }

    /// Preference matrix before any drift permutation.
    pub fn base_preferences(&self) -> &[Vec<f64>] {
        &self.preferences
    }

    pub fn item_names(&self) -> &[String] {
        &self.item_names
    }

    pub fn generate(&self, n_trials: usize) -> Vec<SyntheticTrial> {
        let spec = &self.spec;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_f00d_cafe_d00d);
        let mut drift_rng = ChaCha8Rng::seed_from_u64(spec.seed.rotate_left(17) ^ 0xd21f7);
        let row_samplers: Vec<WeightedIndex<f64>> = self
            .preferences
            .iter()
            .map(|row| WeightedIndex::new(row).expect("validated stochastic row"))
            .collect();
        let noise = Normal::new(0.0, spec.continuous_noise).expect("validated noise");
        // columns[j] = item currently carrying base preference column j
        let mut columns: Vec<usize> = (0..spec.n_items).collect();

        let mut out = Vec::with_capacity(n_trials);
        for t in 0..n_trials {
            if let Some(period) = spec.drift_period {
                if t > 0 && t % period == 0 {
                    columns.shuffle(&mut drift_rng);
                }
            }
            let segment = rng.random_range(0..spec.n_latent_segments);
            let values = match spec.segment_encoding {
                SegmentEncoding::Home => spec
                    .categorical_sizes
                    .iter()
                    .enumerate()
                    .map(|(f, &size)| {
                        if rng.random::<f64>() < spec.feature_noise {
                            rng.random_range(0..size)
                        } else {
                            self.home[segment][f]
                        }
                    })
                    .collect(),
                SegmentEncoding::Modular => modular_values(
                    &spec.categorical_sizes,
                    segment,
                    spec.n_latent_segments,
                    spec.feature_noise,
                    &mut rng,
                ),
            };
            let mut features = BTreeMap::new();
            for (f, value) in values.into_iter().enumerate() {
                features.insert(format!("cat{f}"), format!("c{f}v{value}"));
            }
            for c in 0..spec.n_continuous {
                let unit = self.means[segment][c] + noise.sample(&mut rng);
                features.insert(format!("num{c}"), format!("{:.4}", unit * CONTINUOUS_RANGE));
            }
            let item = columns[row_samplers[segment].sample(&mut rng)];
            out.push(SyntheticTrial {
                raw: RawInteraction {
                    user_id: format!("user_{t}"),
                    timestamp: BASE_TIMESTAMP_MS + t as i64 * 1000,
                    features,
                    chosen_item: self.item_names[item].clone(),
                },
                segment,
            });
        }
        out
    }
}

fn modular_values<R: Rng + ?Sized>(
    sizes: &[usize],
    segment: usize,
    n_segments: usize,
    noise: f64,
    rng: &mut R,
) -> Vec<usize> {
    let mut values: Vec<usize> = sizes
        .iter()
        .map(|&size| rng.random_range(0..size))
        .collect();
    if rng.random::<f64>() >= noise {
        let (last, head) = values.split_last_mut().expect("validated field count");
        let partial: usize = head.iter().sum();
        let residue = (segment + n_segments - partial % n_segments) % n_segments;
        let size = *sizes.last().expect("validated field count");
        // values below `size` congruent to `residue`
        let choices = (size - residue).div_ceil(n_segments);
        *last = residue + n_segments * rng.random_range(0..choices);
    }
    values
}

pub fn generate_synthetic(spec: &SyntheticEnvSpec, n_trials: usize) -> Result<Vec<RawInteraction>> {
    if n_trials == 0 {
        return Err(Error::config("number of synthetic trials must be positive"));
    }
    let generator = SyntheticGenerator::new(spec.clone())?;
    Ok(generator
        .generate(n_trials)
        .into_iter()
        .map(|t| t.raw)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{fit_schema, Encoder};

    pub(crate) fn spec(n_items: usize, segments: usize) -> SyntheticEnvSpec {
        SyntheticEnvSpec {
            n_items,
            categorical_sizes: vec![3, 4],
            n_continuous: 1,
            n_latent_segments: segments,
            segment_preference_matrix: None,
            drift_period: None,
            seed: 11,
            feature_noise: 0.1,
            continuous_noise: 0.1,
            preference_concentration: 1.5,
            segment_encoding: SegmentEncoding::Home,
        }
    }

    #[test]
    fn point_mass_preference_always_picks_item_zero() {
        let mut s = spec(5, 1);
        s.segment_preference_matrix = Some(vec![vec![1.0, 0.0, 0.0, 0.0, 0.0]]);
        let rows = generate_synthetic(&s, 500).unwrap();
        assert!(rows.iter().all(|r| r.chosen_item == "item_0"));
    }

    #[test]
    fn context_dim_matches_vocabulary_sizes() {
        let rows = generate_synthetic(&spec(6, 3), 100).unwrap();
        let schema = fit_schema(&rows).unwrap();
        let enc = Encoder::new(schema);
        assert_eq!(enc.schema().context_dim, 3 + 4 + 1);
        assert_eq!(enc.encode(&rows[0]).unwrap().context.len(), 8);
    }

    #[test]
    fn per_segment_frequencies_follow_preference_rows() {
        let mut s = spec(4, 2);
        let rows = vec![vec![0.7, 0.3, 0.0, 0.0], vec![0.0, 0.0, 0.2, 0.8]];
        s.segment_preference_matrix = Some(rows.clone());
        let trials = SyntheticGenerator::new(s).unwrap().generate(10_000);
        for (seg, row) in rows.iter().enumerate() {
            let mine: Vec<_> = trials.iter().filter(|t| t.segment == seg).collect();
            for (item, &p) in row.iter().enumerate() {
                let name = format!("item_{item}");
                let freq = mine.iter().filter(|t| t.raw.chosen_item == name).count() as f64
                    / mine.len() as f64;
                assert!(
                    (freq - p).abs() <= 0.05,
                    "segment {seg} item {item}: {freq} vs {p}"
                );
            }
        }
    }

    #[test]
    fn drift_moves_item_frequencies() {
        let mut s = spec(10, 1);
        let mut row = vec![0.02; 10];
        row[0] = 0.82;
        s.segment_preference_matrix = Some(vec![row]);
        s.drift_period = Some(1000);
        let generator = SyntheticGenerator::new(s).unwrap();
        let trials = generator.generate(2000);
        let freq = |range: std::ops::Range<usize>, item: &str| {
            trials[range.clone()]
                .iter()
                .filter(|t| t.raw.chosen_item == item)
                .count() as f64
                / range.len() as f64
        };
        // find which item carries the dominant column after the first shuffle
        let dominant_after = (0..10)
            .map(|i| format!("item_{i}"))
            .max_by(|a, b| freq(1000..2000, a).total_cmp(&freq(1000..2000, b)))
            .unwrap();
        if dominant_after != "item_0" {
            assert!((freq(0..1000, "item_0") - freq(1000..2000, "item_0")).abs() > 0.5);
        }
        assert!(freq(0..1000, "item_0") > 0.75);
    }

    #[test]
    fn invalid_matrix_is_rejected() {
        let mut s = spec(2, 1);
        s.segment_preference_matrix = Some(vec![vec![0.6, 0.6]]);
        assert!(matches!(SyntheticGenerator::new(s), Err(Error::Config(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(8, 3);
        assert_eq!(
            generate_synthetic(&s, 300).unwrap(),
            generate_synthetic(&s, 300).unwrap()
        );
    }
}
