//! Seeded Monte Carlo simulation of parties racing to find valid blocks.
//!
//! Time is counted in hash attempts: a party with hashrate `r` makes `r`
//! attempts per tick, and a block whose per-attempt success probability is
//! `p` takes `k / r` ticks with `k ~ Geometric(p)` on `{1, 2, ...}`.
//!
//! Two modes produce that `k`:
//!
//! * [`SimMode::Geometric`] samples `k` directly and then realizes a winning
//!   nonce in O(1) through the invertible nonce mix of the digest model.
//! * [`SimMode::Grind`] tries successive nonces from a random start and
//!   counts attempts. Only allowed for `D <= 20`.
//!
//! Either way every block goes through [`block_valid`] and
//! [`Chain::apply_block`]; nothing bypasses the ledger.
//!
//! Randomness comes from ChaCha8 keyed by the master seed, with stream
//! `trial * 256 + lane` so that each party in each trial draws from its own
//! independent sequence (see [`trial_rng`]).

mod build;
mod race;
mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{
    block_valid, grind_nonce, realize_nonce, spending_statistic, success_probability, target,
    ConsensusError, ConsensusRule, Digest, Rejection,
};
use crate::ledger::{Amount, Block, Chain, LedgerError, PartyId};
use crate::strategies::{plan_block_transactions, Strategy};

pub use build::{run_chain_build, run_chain_trial, BuildFailure, ChainBuildConfig, ChainBuildReport, TrialOutcome};
pub use race::{race_frequency, run_race, PartySpec, RaceConfig, RaceResult, RaceSummary};
pub use stats::TrialStats;

/// Largest difficulty explicit grinding accepts.
pub const MAX_GRIND_DIFFICULTY: u32 = 20;

pub const LANE_BUILDER: u64 = 0;
pub const LANE_HONEST: u64 = 0;
pub const LANE_ADVERSARY: u64 = 1;
pub const LANE_PREFIX: u64 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimMode {
    #[default]
    Geometric,
    Grind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("success probability must be in (0, 1], got {0}")]
    Probability(f64),
    #[error("hashrate must be positive and finite, got {0}")]
    Hashrate(f64),
    #[error("explicit grinding supports D <= {MAX_GRIND_DIFFICULTY}, got {0}")]
    GrindDifficulty(u32),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("chain length must be at least 1")]
    ZeroLength,
    #[error("{0}")]
    Consensus(#[from] ConsensusError),
    #[error("simulated block rejected: {0}")]
    Rejected(#[from] Rejection),
    #[error("ledger: {0}")]
    Ledger(#[from] LedgerError),
    #[error("amount overflow")]
    Overflow,
}

/// Independent generator for one party (`lane`) in one trial.
pub fn trial_rng(seed: u64, trial: u64, lane: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(256).wrapping_add(lane));
    rng
}

fn check_hashrate(hashrate: f64) -> Result<(), SimError> {
    if hashrate.is_finite() && hashrate > 0.0 {
        Ok(())
    } else {
        Err(SimError::Hashrate(hashrate))
    }
}

/// Attempts until the first success, `k >= 1`.
pub fn sample_attempts<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64, SimError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(SimError::Probability(p));
    }
    if p == 1.0 {
        return Ok(1);
    }
    let failures = Geometric::new(p).map_err(|_| SimError::Probability(p))?.sample(rng);
    Ok(failures.saturating_add(1))
}

/// Ticks until a party with `hashrate` finds a block at per-attempt probability `p`.
pub fn sample_block_time<R: Rng + ?Sized>(p: f64, hashrate: f64, rng: &mut R) -> Result<f64, SimError> {
    check_hashrate(hashrate)?;
    Ok(sample_attempts(p, rng)? as f64 / hashrate)
}

/// Time to one block at statistic `s` under `rule`'s difficulty, over `trials`
/// independent trials. Exact expectation: `2^D / (1 + s)` per unit hashrate
/// (1 once the success probability caps).
pub fn measure_block_time(
    rule: &ConsensusRule,
    statistic: Amount,
    hashrate: f64,
    trials: usize,
    seed: u64,
    mode: SimMode,
) -> Result<TrialStats, SimError> {
    Ok(TrialStats::from_samples(&block_time_samples(rule, statistic, hashrate, trials, seed, mode)?))
}

/// The raw samples behind [`measure_block_time`], in trial order.
pub fn block_time_samples(
    rule: &ConsensusRule,
    statistic: Amount,
    hashrate: f64,
    trials: usize,
    seed: u64,
    mode: SimMode,
) -> Result<Vec<f64>, SimError> {
    rule.validate()?;
    check_hashrate(hashrate)?;
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    if mode == SimMode::Grind && rule.difficulty > MAX_GRIND_DIFFICULTY {
        return Err(SimError::GrindDifficulty(rule.difficulty));
    }
    let p = success_probability(rule.difficulty, statistic);
    let target = target(rule.difficulty, statistic);
    (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial, LANE_BUILDER);
            match mode {
                SimMode::Geometric => sample_block_time(p, hashrate, &mut rng),
                SimMode::Grind => {
                    // A fresh header per trial: random parent digest, empty body.
                    let mut block = Block {
                        time: 0,
                        prev_digest: Digest(rng.random()),
                        transactions: Vec::new(),
                        creator: PartyId(0),
                        nonce: 0,
                        reward: Amount::ZERO,
                    };
                    let start = rng.random();
                    let k = grind_nonce(&mut block, &target, start, u64::MAX).expect("target is reachable");
                    Ok(k as f64 / hashrate)
                }
            }
        })
        .collect()
}

/// A block found by one party, with the ticks it took.
#[derive(Clone, Debug)]
pub(crate) struct MinedBlock {
    pub block: Block,
    pub elapsed: f64,
    pub statistic: Amount,
    /// Set when the party could not fund its planned transactions and mined an empty block.
    pub plan_error: Option<LedgerError>,
}

pub(crate) struct Miner<'a, R: Rng> {
    pub id: PartyId,
    pub hashrate: f64,
    pub strategy: &'a Strategy,
    pub rng: R,
    pub mode: SimMode,
}

impl<R: Rng> Miner<'_, R> {
    /// Prepares, solves and validates this party's next block on `chain`.
    /// `now` is the tick at which the party starts working on it.
    pub fn mine(&mut self, chain: &Chain, rule: &ConsensusRule, now: f64) -> Result<MinedBlock, SimError> {
        let time = (now.floor() as u64).max(chain.tip_time());
        let (mut transactions, plan_error) = match plan_block_transactions(self.strategy, self.id, chain) {
            Ok(txs) => (txs, None),
            Err(e) => (Vec::new(), Some(e)),
        };
        for tx in &mut transactions {
            tx.time = time;
        }
        let mut block = Block {
            time,
            prev_digest: chain.tip_digest(),
            transactions,
            creator: self.id,
            nonce: 0,
            reward: chain.params().reward,
        };
        let statistic = spending_statistic(rule, self.id, chain);
        let target = target(rule.difficulty, statistic);
        let attempts = match self.mode {
            SimMode::Geometric => {
                let k = sample_attempts(success_probability(rule.difficulty, statistic), &mut self.rng)?;
                realize_nonce(&mut block, &target, &mut self.rng)?;
                k
            }
            SimMode::Grind => {
                if rule.difficulty > MAX_GRIND_DIFFICULTY {
                    return Err(SimError::GrindDifficulty(rule.difficulty));
                }
                let start = self.rng.random();
                grind_nonce(&mut block, &target, start, u64::MAX).expect("target is reachable")
            }
        };
        block_valid(&block, chain, rule)?;
        Ok(MinedBlock { block, elapsed: attempts as f64 / self.hashrate, statistic, plan_error })
    }
}
