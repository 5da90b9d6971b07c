use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{ConsensusRule, RuleKind};
use crate::ledger::{Allocation, Amount, FeeRate, LedgerParams, PartyId};
use crate::simulator::{SimMode, MAX_GRIND_DIFFICULTY};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &'static str, message: impl Into<String>) -> Self {
        ConfigError { field, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenesisEntry {
    pub party: u64,
    /// Whole coins.
    pub amount: f64,
    /// Number of equal outputs the amount is split into.
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub outputs: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HashrateEntry {
    pub party: u64,
    pub rate: f64,
}

fn one() -> u64 {
    1
}

fn is_one(v: &u64) -> bool {
    *v == 1
}

fn one_f64() -> f64 {
    1.0
}

fn one_usize() -> usize {
    1
}

/// Experiment parameters. Amounts are whole coins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub rule: RuleKind,
    #[serde(alias = "D")]
    pub difficulty: u32,
    #[serde(alias = "F", default = "one")]
    pub freshness: u64,
    #[serde(alias = "E", default)]
    pub experience: u64,
    #[serde(alias = "Rwd")]
    pub reward: f64,
    #[serde(alias = "FPC")]
    pub fee_per_coin: f64,
    #[serde(alias = "WR", default = "one_f64")]
    pub work_ratio: f64,
    #[serde(alias = "L", default = "one")]
    pub length: u64,
    #[serde(default = "one_usize")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: SimMode,
    pub genesis: Vec<GenesisEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hashrates: Vec<HashrateEntry>,
    /// Total network coins; defaults to the genesis sum.
    #[serde(alias = "CN", default, skip_serializing_if = "Option::is_none")]
    pub network_coins: Option<f64>,
    /// Spending statistic `s` (coins) for `block-time`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<f64>,
    /// Building party for `chain-build`, `earning-rate`, `sustainability`;
    /// the honest party in `race`. Defaults to the first genesis party.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builder: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary: Option<u64>,
    /// Adversary work ratio in `race`; defaults to `work_ratio`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adversary_work_ratio: Option<f64>,
    /// Honest work ratio in `race`; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub honest_work_ratio: Option<f64>,
    /// Race length in ticks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Untimed blocks before the measured run; defaults to `experience` for PSO/RSO.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix_blocks: Option<u64>,
    /// Work ratios for `earning-rate`; defaults to `[work_ratio]`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<f64>,
}

impl SimConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: SimConfig = serde_json::from_str(text).map_err(|e| ConfigError::new("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(1..=256).contains(&self.difficulty) {
            return Err(ConfigError::new("difficulty", "must be in 1..=256"));
        }
        if self.mode == SimMode::Grind && self.difficulty > MAX_GRIND_DIFFICULTY {
            return Err(ConfigError::new("mode", format!("grind mode needs difficulty <= {MAX_GRIND_DIFFICULTY}")));
        }
        if self.rule.uses_freshness() && self.freshness == 0 {
            return Err(ConfigError::new("freshness", "must be at least 1"));
        }
        coins("reward", self.reward)?;
        let fpc = FeeRate::from_per_coin(self.fee_per_coin)
            .ok_or_else(|| ConfigError::new("fee_per_coin", "must be a non-negative number"))?;
        if fpc.0 == 0 {
            return Err(ConfigError::new("fee_per_coin", "must be positive"));
        }
        ratio("work_ratio", self.work_ratio)?;
        if let Some(wr) = self.adversary_work_ratio {
            ratio("adversary_work_ratio", wr)?;
        }
        if let Some(wr) = self.honest_work_ratio {
            ratio("honest_work_ratio", wr)?;
        }
        for &wr in &self.sweep {
            ratio("sweep", wr)?;
        }
        if self.length == 0 {
            return Err(ConfigError::new("length", "must be at least 1"));
        }
        if self.trials == 0 {
            return Err(ConfigError::new("trials", "must be at least 1"));
        }
        if self.genesis.is_empty() {
            return Err(ConfigError::new("genesis", "needs at least one allocation"));
        }
        for g in &self.genesis {
            coins("genesis", g.amount)?;
            if g.outputs == 0 {
                return Err(ConfigError::new("genesis", "outputs must be at least 1"));
            }
        }
        for h in &self.hashrates {
            if !(h.rate.is_finite() && h.rate > 0.0) {
                return Err(ConfigError::new("hashrates", format!("rate for party {} must be positive", h.party)));
            }
        }
        if let Some(cn) = self.network_coins {
            let cn = coins("network_coins", cn)?;
            if cn < self.genesis_supply() {
                return Err(ConfigError::new("network_coins", "must be at least the genesis supply"));
            }
        }
        if let Some(s) = self.statistic {
            coins("statistic", s)?;
        }
        if let Some(h) = self.horizon {
            if !(h.is_finite() && h > 0.0) {
                return Err(ConfigError::new("horizon", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn consensus_rule(&self) -> ConsensusRule {
        ConsensusRule { kind: self.rule, difficulty: self.difficulty, freshness: self.freshness, experience: self.experience }
    }

    pub fn ledger_params(&self) -> LedgerParams {
        LedgerParams::new(
            Amount::from_coins(self.reward).expect("validated"),
            FeeRate::from_per_coin(self.fee_per_coin).expect("validated"),
        )
        .with_experience(self.consensus_rule().min_age())
    }

    pub fn allocations(&self) -> Vec<Allocation> {
        self.genesis
            .iter()
            .flat_map(|g| Allocation::split(PartyId(g.party), Amount::from_coins(g.amount).expect("validated"), g.outputs))
            .collect()
    }

    pub fn genesis_supply(&self) -> Amount {
        self.genesis.iter().filter_map(|g| Amount::from_coins(g.amount)).sum()
    }

    pub fn network_coins(&self) -> Amount {
        self.network_coins.and_then(Amount::from_coins).unwrap_or_else(|| self.genesis_supply())
    }

    pub fn builder(&self) -> PartyId {
        PartyId(self.builder.unwrap_or(self.genesis[0].party))
    }

    pub fn adversary(&self) -> Result<PartyId, ConfigError> {
        self.adversary
            .map(PartyId)
            .ok_or_else(|| ConfigError::new("adversary", "race needs an adversary party"))
    }

    pub fn hashrate(&self, party: PartyId) -> f64 {
        self.hashrates.iter().find(|h| h.party == party.0).map_or(1.0, |h| h.rate)
    }

    pub fn prefix_blocks(&self) -> u64 {
        self.prefix_blocks.unwrap_or_else(|| self.consensus_rule().min_age())
    }

    pub fn statistic(&self) -> Amount {
        self.statistic.and_then(Amount::from_coins).unwrap_or_default()
    }
}

fn coins(field: &'static str, v: f64) -> Result<Amount, ConfigError> {
    Amount::from_coins(v).ok_or_else(|| ConfigError::new(field, "must be a non-negative coin amount"))
}

fn ratio(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, "must be positive"))
    }
}
