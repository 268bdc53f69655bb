use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Policies of the comparison matrix. The numeric code is the row number
/// used in the comparison table; `Random` is the reference policy for
/// relative CTR and has code 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyId {
    Random,
    StaticLr,
    BUcb,
    BTs,
    EGreedy,
    Fee,
    Ae,
    DbLr,
    DbMlp,
    DbscanDbMlp,
}

impl PolicyId {
    pub const ALL: [PolicyId; 10] = [
        PolicyId::Random,
        PolicyId::StaticLr,
        PolicyId::BUcb,
        PolicyId::BTs,
        PolicyId::EGreedy,
        PolicyId::Fee,
        PolicyId::Ae,
        PolicyId::DbLr,
        PolicyId::DbMlp,
        PolicyId::DbscanDbMlp,
    ];

    /// Policies in the default comparison matrix.
    pub const COMPARISON: [PolicyId; 9] = [
        PolicyId::StaticLr,
        PolicyId::BUcb,
        PolicyId::BTs,
        PolicyId::EGreedy,
        PolicyId::Fee,
        PolicyId::Ae,
        PolicyId::DbLr,
        PolicyId::DbMlp,
        PolicyId::DbscanDbMlp,
    ];

    pub fn code(self) -> u32 {
        match self {
            PolicyId::Random => 0,
            PolicyId::StaticLr => 1,
            PolicyId::BUcb => 4,
            PolicyId::BTs => 5,
            PolicyId::EGreedy => 6,
            PolicyId::Fee => 7,
            PolicyId::Ae => 8,
            PolicyId::DbLr => 9,
            PolicyId::DbMlp => 10,
            PolicyId::DbscanDbMlp => 11,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyId::Random => "random",
            PolicyId::StaticLr => "static-lr",
            PolicyId::BUcb => "b-ucb",
            PolicyId::BTs => "b-ts",
            PolicyId::EGreedy => "e-greedy",
            PolicyId::Fee => "fee",
            PolicyId::Ae => "ae",
            PolicyId::DbLr => "db-lr",
            PolicyId::DbMlp => "db-mlp",
            PolicyId::DbscanDbMlp => "dbscan-db-mlp",
        }
    }

    pub fn is_static(self) -> bool {
        self == PolicyId::StaticLr
    }

    pub fn is_dbgd(self) -> bool {
        matches!(
            self,
            PolicyId::DbLr | PolicyId::DbMlp | PolicyId::DbscanDbMlp
        )
    }

    /// Whether the policy always runs with cluster-based candidate reduction.
    pub fn forces_clustering(self) -> bool {
        self == PolicyId::DbscanDbMlp
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown policy `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Trials of uniform exploration before first-explore-then-exploit
    /// switches to greedy.
    #[serde(default = "default_fee_horizon")]
    pub fee_explore_trials: usize,
    #[serde(default = "default_members")]
    pub bootstrap_members: usize,
    /// Nearest-rank percentile of the ensemble scores used by B-UCB.
    #[serde(default = "default_percentile")]
    pub ucb_percentile: f64,
    /// Probability that Active Explorer samples by uncertainty instead of
    /// ranking greedily.
    #[serde(default = "default_ae_share")]
    pub ae_uncertainty_share: f64,
    /// Perturbation radius of the exploratory model.
    #[serde(default = "default_delta")]
    pub dbgd_delta: f64,
    /// Step size toward a winning perturbation.
    #[serde(default = "default_beta")]
    pub dbgd_beta: f64,
}

fn default_epsilon() -> f64 {
    0.2
}
fn default_fee_horizon() -> usize {
    5000
}
fn default_members() -> usize {
    10
}
fn default_percentile() -> f64 {
    80.0
}
fn default_ae_share() -> f64 {
    0.5
}
fn default_delta() -> f64 {
    1.0
}
fn default_beta() -> f64 {
    0.05
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            fee_explore_trials: default_fee_horizon(),
            bootstrap_members: default_members(),
            ucb_percentile: default_percentile(),
            ae_uncertainty_share: default_ae_share(),
            dbgd_delta: default_delta(),
            dbgd_beta: default_beta(),
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config("policies.epsilon must lie in [0, 1]"));
        }
        if self.bootstrap_members < 2 {
            return Err(Error::config(
                "policies.bootstrap_members must be at least 2",
            ));
        }
        if !(self.ucb_percentile > 50.0 && self.ucb_percentile < 100.0) {
            return Err(Error::config(
                "policies.ucb_percentile must lie in (50, 100)",
            ));
        }
        if !(0.0..=1.0).contains(&self.ae_uncertainty_share) {
            return Err(Error::config(
                "policies.ae_uncertainty_share must lie in [0, 1]",
            ));
        }
        for (name, v) in [
            ("dbgd_delta", self.dbgd_delta),
            ("dbgd_beta", self.dbgd_beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "policies.{name} must be finite and positive"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip_through_strings() {
        for id in PolicyId::ALL {
            assert_eq!(id.as_str().parse::<PolicyId>().unwrap(), id);
            assert_eq!(
                serde_json::to_string(&id).unwrap(),
                format!("\"{}\"", id.as_str())
            );
        }
        assert!("dueling".parse::<PolicyId>().is_err());
    }

    #[test]
    fn defaults_validate_and_ranges_are_enforced() {
        PolicyConfig::default().validate().unwrap();
        let bad = PolicyConfig {
            ucb_percentile: 100.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PolicyConfig {
            bootstrap_members: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
