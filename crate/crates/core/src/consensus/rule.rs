use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::digest::{Digest, HeaderHash};
use crate::ledger::{Amount, Block, Chain, LedgerError, PartyId, COIN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RuleKind {
    /// Proof of work.
    Pow,
    /// Proof of balance.
    Pob,
    /// Proof of spending.
    Psp,
    /// Proof of recent spending (window of `freshness` blocks).
    Prs,
    /// Proof of spending of old coins (inputs at least `experience` old).
    Pso,
    /// Proof of recent spending of old coins.
    Rso,
}

impl RuleKind {
    pub const ALL: [RuleKind; 6] =
        [RuleKind::Pow, RuleKind::Pob, RuleKind::Psp, RuleKind::Prs, RuleKind::Pso, RuleKind::Rso];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleKind::Pow => "POW",
            RuleKind::Pob => "POB",
            RuleKind::Psp => "PSP",
            RuleKind::Prs => "PRS",
            RuleKind::Pso => "PSO",
            RuleKind::Rso => "RSO",
        }
    }

    pub fn uses_freshness(self) -> bool {
        matches!(self, RuleKind::Prs | RuleKind::Rso)
    }

    pub fn uses_experience(self) -> bool {
        matches!(self, RuleKind::Pso | RuleKind::Rso)
    }

    pub fn is_spending_rule(self) -> bool {
        matches!(self, RuleKind::Psp | RuleKind::Prs | RuleKind::Pso | RuleKind::Rso)
    }
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RuleKind {
    type Err = ConsensusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RuleKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| ConsensusError::UnknownRule(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConsensusError {
    #[error("unknown consensus rule {0:?}")]
    UnknownRule(String),
    #[error("difficulty must be in 1..=256, got {0}")]
    Difficulty(u32),
    #[error("freshness must be at least 1")]
    Freshness,
    #[error("target below 2^192 cannot be realized by the nonce model")]
    TargetTooSmall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConsensusRule {
    pub kind: RuleKind,
    /// Target difficulty `D` in bits.
    pub difficulty: u32,
    /// Freshness `F`; ignored unless the rule is windowed.
    pub freshness: u64,
    /// Experience `E`; ignored unless the rule is age-restricted.
    pub experience: u64,
}

impl ConsensusRule {
    pub fn new(kind: RuleKind, difficulty: u32, freshness: u64, experience: u64) -> Result<Self, ConsensusError> {
        let rule = ConsensusRule { kind, difficulty, freshness, experience };
        rule.validate()?;
        Ok(rule)
    }

    pub fn pow(difficulty: u32) -> Self {
        ConsensusRule { kind: RuleKind::Pow, difficulty, freshness: 1, experience: 0 }
    }

    pub fn pob(difficulty: u32) -> Self {
        ConsensusRule { kind: RuleKind::Pob, ..Self::pow(difficulty) }
    }

    pub fn psp(difficulty: u32) -> Self {
        ConsensusRule { kind: RuleKind::Psp, ..Self::pow(difficulty) }
    }

    pub fn prs(difficulty: u32, freshness: u64) -> Self {
        ConsensusRule { kind: RuleKind::Prs, difficulty, freshness, experience: 0 }
    }

    pub fn pso(difficulty: u32, experience: u64) -> Self {
        ConsensusRule { kind: RuleKind::Pso, difficulty, freshness: 1, experience }
    }

    pub fn rso(difficulty: u32, freshness: u64, experience: u64) -> Self {
        ConsensusRule { kind: RuleKind::Rso, difficulty, freshness, experience }
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        if !(1..=256).contains(&self.difficulty) {
            return Err(ConsensusError::Difficulty(self.difficulty));
        }
        if self.kind.uses_freshness() && self.freshness == 0 {
            return Err(ConsensusError::Freshness);
        }
        Ok(())
    }

    /// The same rule with the spending statistic dropped.
    pub fn as_pow(&self) -> Self {
        Self::pow(self.difficulty)
    }

    /// Coin age to use for inputs, 0 unless the rule is age-restricted.
    pub fn min_age(&self) -> u64 {
        if self.kind.uses_experience() {
            self.experience
        } else {
            0
        }
    }
}

/// The rule's statistic `s` for `creator` on chain `chain`.
pub fn spending_statistic(rule: &ConsensusRule, creator: PartyId, chain: &Chain) -> Amount {
    match rule.kind {
        RuleKind::Pow => Amount::ZERO,
        RuleKind::Pob => chain.balance(creator),
        RuleKind::Psp => chain.spent_total(creator),
        RuleKind::Prs => chain.spent_recent(creator, rule.freshness),
        RuleKind::Pso => chain.spent_old(creator, rule.experience),
        RuleKind::Rso => chain.spent_recent_old(creator, rule.freshness, rule.experience),
    }
}

/// `min(2^width - 1, floor((1 + s) * 2^(width - D)))` with `s` in coins.
pub fn target_for_width(width: u32, difficulty: u32, statistic: Amount) -> BigUint {
    assert!(difficulty >= 1 && difficulty <= width, "difficulty {difficulty} outside 1..={width}");
    let one_plus_s = BigUint::from(COIN) + BigUint::from(statistic.base());
    let raw = (one_plus_s << (width - difficulty)) / BigUint::from(COIN);
    let cap = (BigUint::one() << width) - BigUint::one();
    raw.min(cap)
}

pub fn target(difficulty: u32, statistic: Amount) -> Digest {
    Digest::from_biguint(&target_for_width(256, difficulty, statistic)).expect("capped at 256 bits")
}

/// `target / 2^256`: the chance that one uniform digest meets the target.
pub fn success_probability(difficulty: u32, statistic: Amount) -> f64 {
    let t = target_for_width(256, difficulty, statistic);
    // Scale down first; f64 keeps 53 bits so the shift loses nothing material.
    let scaled = (t >> 128u32).to_f64().unwrap_or(f64::INFINITY);
    (scaled / 2f64.powi(128)).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Rejection {
    #[error("structurally invalid: {0}")]
    Structural(#[from] LedgerError),
    #[error("digest {digest} does not meet target {target}")]
    Threshold { digest: Digest, target: Digest },
}

/// Checks `block` against `parent` under `rule`. The statistic is taken on
/// `parent`, so the candidate block never counts towards its own threshold.
pub fn block_valid(block: &Block, parent: &Chain, rule: &ConsensusRule) -> Result<Digest, Rejection> {
    let digest = parent.validate_block(block)?;
    let s = spending_statistic(rule, block.creator, parent);
    let target = target(rule.difficulty, s);
    if digest < target {
        Ok(digest)
    } else {
        Err(Rejection::Threshold { digest, target })
    }
}

/// Longest chain wins; among equals, the earliest candidate in iteration
/// order. Callers list candidates in arrival order.
pub fn fork_choice<'a, I>(candidates: I) -> Option<&'a Chain>
where
    I: IntoIterator<Item = &'a Chain>,
{
    let mut best: Option<&Chain> = None;
    for c in candidates {
        if best.is_none_or(|b| c.len() > b.len()) {
            best = Some(c);
        }
    }
    best
}

/// Sets `block.nonce` to a winning nonce whose digest is uniform over all
/// winning digests of this header. O(1); used by geometric-mode simulation.
pub fn realize_nonce<R: Rng + ?Sized>(block: &mut Block, target: &Digest, rng: &mut R) -> Result<Digest, ConsensusError> {
    let header = HeaderHash::of(block);
    let low_ok = header.low192() < target.low192();
    let count = target.top64() as u128 + u128::from(low_ok);
    if count == 0 {
        return Err(ConsensusError::TargetTooSmall);
    }
    let top = rng.random_range(0..count) as u64;
    block.nonce = header.nonce_for_top(top);
    let digest = header.digest_with_nonce(block.nonce);
    debug_assert!(digest < *target);
    Ok(digest)
}

/// Tries nonces `start, start + 1, ...` until one meets `target`. Returns the
/// number of attempts made, or `None` after `max_attempts` failures.
pub fn grind_nonce(block: &mut Block, target: &Digest, start: u64, max_attempts: u64) -> Option<u64> {
    let header = HeaderHash::of(block);
    for i in 0..max_attempts {
        let nonce = start.wrapping_add(i);
        if header.digest_with_nonce(nonce) < *target {
            block.nonce = nonce;
            return Some(i + 1);
        }
    }
    None
}

#[cfg(test)]
mod tests;
