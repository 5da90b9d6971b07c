use rayon::prelude::*;

use super::{check_hashrate, trial_rng, Miner, SimError, SimMode, TrialStats, LANE_BUILDER, LANE_PREFIX};
use crate::consensus::ConsensusRule;
use crate::ledger::{Allocation, Amount, Chain, LedgerError, LedgerParams, PartyId};
use crate::strategies::Strategy;

/// One party building a chain alone from genesis.
#[derive(Clone, Debug)]
pub struct ChainBuildConfig {
    pub rule: ConsensusRule,
    pub params: LedgerParams,
    pub genesis: Vec<Allocation>,
    pub builder: PartyId,
    pub hashrate: f64,
    pub strategy: Strategy,
    /// Blocks the builder mines.
    pub length: u64,
    /// Untimed empty blocks mined by `prefix_creator` before the builder
    /// starts, so that genesis coins are already aged.
    pub prefix_blocks: u64,
    pub prefix_creator: PartyId,
    pub mode: SimMode,
    /// End the trial when the builder cannot fund its spend. Otherwise it
    /// mines an empty block and carries on.
    pub stop_on_infeasible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BuildFailure {
    /// Chain length when the plan failed, prefix included.
    pub height: u64,
    /// Blocks the builder had mined before failing.
    pub blocks_built: u64,
    pub error: LedgerError,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    /// Ticks spent on each builder block, in order.
    pub block_times: Vec<f64>,
    pub total_time: f64,
    /// Spending statistic the builder faced for each block.
    pub statistics: Vec<Amount>,
    /// Builder balance before each of its blocks, then after the last one.
    pub balances: Vec<Amount>,
    pub failure: Option<BuildFailure>,
    /// Blocks where the plan failed but the run continued with an empty block.
    pub skipped_plans: u64,
}

#[derive(Clone, Debug)]
pub struct ChainBuildReport {
    /// Total build time over trials that reached the full length.
    pub total: TrialStats,
    /// Mean time of block `i` over trials that reached it.
    pub per_block_mean: Vec<f64>,
    pub failures: usize,
    pub trials: Vec<TrialOutcome>,
}

impl ChainBuildConfig {
    fn validate(&self) -> Result<(), SimError> {
        self.rule.validate()?;
        check_hashrate(self.hashrate)?;
        if self.length == 0 {
            return Err(SimError::ZeroLength);
        }
        if self.mode == SimMode::Grind && self.rule.difficulty > super::MAX_GRIND_DIFFICULTY {
            return Err(SimError::GrindDifficulty(self.rule.difficulty));
        }
        Ok(())
    }

    /// Genesis plus the untimed prefix. Deterministic in `(seed, trial)`.
    pub(crate) fn starting_chain(&self, seed: u64, trial: u64) -> Result<Chain, SimError> {
        let mut chain = Chain::new(self.params, self.genesis.clone());
        let idle = Strategy::idle();
        let mut miner = Miner {
            id: self.prefix_creator,
            hashrate: 1.0,
            strategy: &idle,
            rng: trial_rng(seed, trial, LANE_PREFIX),
            mode: SimMode::Geometric,
        };
        for _ in 0..self.prefix_blocks {
            let mined = miner.mine(&chain, &self.rule, 0.0)?;
            chain.apply_block(mined.block)?;
        }
        Ok(chain)
    }
}

/// Runs one trial and returns the chain it produced.
pub fn run_chain_trial(cfg: &ChainBuildConfig, seed: u64, trial: u64) -> Result<(TrialOutcome, Chain), SimError> {
    cfg.validate()?;
    let mut chain = cfg.starting_chain(seed, trial)?;
    let mut miner = Miner {
        id: cfg.builder,
        hashrate: cfg.hashrate,
        strategy: &cfg.strategy,
        rng: trial_rng(seed, trial, LANE_BUILDER),
        mode: cfg.mode,
    };
    let mut outcome = TrialOutcome {
        block_times: Vec::with_capacity(cfg.length as usize),
        total_time: 0.0,
        statistics: Vec::with_capacity(cfg.length as usize),
        balances: Vec::with_capacity(cfg.length as usize + 1),
        failure: None,
        skipped_plans: 0,
    };
    let mut now = 0.0;
    for built in 0..cfg.length {
        outcome.balances.push(chain.balance(cfg.builder));
        let mined = miner.mine(&chain, &cfg.rule, now)?;
        if let Some(error) = mined.plan_error {
            if cfg.stop_on_infeasible {
                outcome.failure = Some(BuildFailure { height: chain.len(), blocks_built: built, error });
                return Ok((outcome, chain));
            }
            outcome.skipped_plans += 1;
        }
        now += mined.elapsed;
        outcome.block_times.push(mined.elapsed);
        outcome.statistics.push(mined.statistic);
        chain.apply_block(mined.block)?;
    }
    outcome.balances.push(chain.balance(cfg.builder));
    outcome.total_time = now;
    Ok((outcome, chain))
}

/// Runs `trials` independent solo builds. Trials run in parallel; results
/// are kept in trial order so aggregates do not depend on scheduling.
pub fn run_chain_build(cfg: &ChainBuildConfig, trials: usize, seed: u64) -> Result<ChainBuildReport, SimError> {
    if trials == 0 {
        return Err(SimError::NoTrials);
    }
    cfg.validate()?;
    let outcomes: Vec<TrialOutcome> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_chain_trial(cfg, seed, t).map(|(o, _)| o))
        .collect::<Result<_, _>>()?;

    let complete: Vec<f64> = outcomes.iter().filter(|o| o.failure.is_none()).map(|o| o.total_time).collect();
    let mut sums = vec![0.0; cfg.length as usize];
    let mut counts = vec![0usize; cfg.length as usize];
    for o in &outcomes {
        for (i, t) in o.block_times.iter().enumerate() {
            sums[i] += t;
            counts[i] += 1;
        }
    }
    let per_block_mean = sums
        .iter()
        .zip(&counts)
        .take_while(|(_, c)| **c > 0)
        .map(|(s, c)| s / *c as f64)
        .collect();
    Ok(ChainBuildReport {
        total: TrialStats::from_samples(&complete),
        per_block_mean,
        failures: outcomes.iter().filter(|o| o.failure.is_some()).count(),
        trials: outcomes,
    })
}
