use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_hashrate, trial_rng, Miner, SimError, SimMode, LANE_ADVERSARY, LANE_HONEST, LANE_PREFIX};
use crate::consensus::{fork_choice, ConsensusRule};
use crate::ledger::{Allocation, Chain, LedgerParams, PartyId};
use crate::strategies::Strategy;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartySpec {
    pub id: PartyId,
    /// Hash attempts per tick.
    pub hashrate: f64,
    pub strategy: Strategy,
}

#[derive(Clone, Debug)]
pub struct RaceConfig {
    pub rule: ConsensusRule,
    pub params: LedgerParams,
    pub genesis: Vec<Allocation>,
    pub honest: PartySpec,
    pub adversary: PartySpec,
    /// Ticks simulated after the fork.
    pub horizon: f64,
    /// Untimed shared blocks mined by the honest party before the fork.
    pub prefix_blocks: u64,
    pub mode: SimMode,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RaceResult {
    pub fork_height: u64,
    pub honest_length: u64,
    pub adversary_length: u64,
    /// Whether fork choice over both chains, in tip-arrival order, picks the
    /// adversary's private fork at the horizon.
    pub overtook: bool,
    /// Balance change since the fork, in base units, on each party's own chain.
    pub honest_net: i128,
    pub adversary_net: i128,
    /// Ticks between consecutive blocks of each party after the fork.
    pub honest_block_times: Vec<f64>,
    pub adversary_block_times: Vec<f64>,
    /// Blocks mined empty because the party could not fund its plan.
    pub honest_skipped: u64,
    pub adversary_skipped: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RaceSummary {
    pub runs: usize,
    pub overtakes: usize,
    pub frequency: f64,
    /// Binomial standard error of `frequency`.
    pub stderr: f64,
    pub results: Vec<RaceResult>,
}

fn net(chain: &Chain, party: PartyId, start: &Chain) -> i128 {
    chain.balance(party).base() as i128 - start.balance(party).base() as i128
}

/// Honest chain against a private adversary fork, each party mining on its
/// own chain with an independent geometric clock, until `horizon` ticks.
pub fn run_race(cfg: &RaceConfig, seed: u64, trial: u64) -> Result<RaceResult, SimError> {
    cfg.rule.validate()?;
    check_hashrate(cfg.honest.hashrate)?;
    check_hashrate(cfg.adversary.hashrate)?;
    if cfg.mode == SimMode::Grind && cfg.rule.difficulty > super::MAX_GRIND_DIFFICULTY {
        return Err(SimError::GrindDifficulty(cfg.rule.difficulty));
    }

    let mut shared = Chain::new(cfg.params, cfg.genesis.clone());
    let mut prefix_miner = Miner {
        id: cfg.honest.id,
        hashrate: cfg.honest.hashrate,
        strategy: &cfg.honest.strategy,
        rng: trial_rng(seed, trial, LANE_PREFIX),
        mode: SimMode::Geometric,
    };
    for _ in 0..cfg.prefix_blocks {
        let mined = prefix_miner.mine(&shared, &cfg.rule, 0.0)?;
        shared.apply_block(mined.block)?;
    }
    let fork_height = shared.len();

    let mut honest_chain = shared.clone();
    let mut adversary_chain = shared.clone();
    let mut honest = Miner {
        id: cfg.honest.id,
        hashrate: cfg.honest.hashrate,
        strategy: &cfg.honest.strategy,
        rng: trial_rng(seed, trial, LANE_HONEST),
        mode: cfg.mode,
    };
    let mut adversary = Miner {
        id: cfg.adversary.id,
        hashrate: cfg.adversary.hashrate,
        strategy: &cfg.adversary.strategy,
        rng: trial_rng(seed, trial, LANE_ADVERSARY),
        mode: cfg.mode,
    };

    let mut result = RaceResult {
        fork_height,
        honest_length: fork_height,
        adversary_length: fork_height,
        overtook: false,
        honest_net: 0,
        adversary_net: 0,
        honest_block_times: Vec::new(),
        adversary_block_times: Vec::new(),
        honest_skipped: 0,
        adversary_skipped: 0,
    };

    let (mut honest_last, mut adversary_last) = (0.0f64, 0.0f64);
    let mut honest_next = honest.mine(&honest_chain, &cfg.rule, 0.0)?;
    let mut adversary_next = adversary.mine(&adversary_chain, &cfg.rule, 0.0)?;
    loop {
        let honest_at = honest_last + honest_next.elapsed;
        let adversary_at = adversary_last + adversary_next.elapsed;
        // Ties go to the honest party.
        if honest_at.min(adversary_at) > cfg.horizon {
            break;
        }
        if honest_at <= adversary_at {
            result.honest_skipped += u64::from(honest_next.plan_error.is_some());
            result.honest_block_times.push(honest_next.elapsed);
            honest_chain.apply_block(honest_next.block)?;
            honest_last = honest_at;
            honest_next = honest.mine(&honest_chain, &cfg.rule, honest_last)?;
        } else {
            result.adversary_skipped += u64::from(adversary_next.plan_error.is_some());
            result.adversary_block_times.push(adversary_next.elapsed);
            adversary_chain.apply_block(adversary_next.block)?;
            adversary_last = adversary_at;
            adversary_next = adversary.mine(&adversary_chain, &cfg.rule, adversary_last)?;
        }
    }

    // Candidates in the order their tips were first seen; the shared prefix
    // counts as honest.
    let adversary_first = !result.adversary_block_times.is_empty()
        && (result.honest_block_times.is_empty() || adversary_last < honest_last);
    let ordered = if adversary_first {
        [&adversary_chain, &honest_chain]
    } else {
        [&honest_chain, &adversary_chain]
    };
    let chosen = fork_choice(ordered).expect("two candidates");
    result.overtook = std::ptr::eq(chosen, &adversary_chain);
    result.honest_length = honest_chain.len();
    result.adversary_length = adversary_chain.len();
    result.honest_net = net(&honest_chain, cfg.honest.id, &shared);
    result.adversary_net = net(&adversary_chain, cfg.adversary.id, &shared);
    Ok(result)
}

/// Runs `runs` independent races and reports how often the adversary wins.
pub fn race_frequency(cfg: &RaceConfig, runs: usize, seed: u64) -> Result<RaceSummary, SimError> {
    if runs == 0 {
        return Err(SimError::NoTrials);
    }
    let results: Vec<RaceResult> = (0..runs as u64)
        .into_par_iter()
        .map(|t| run_race(cfg, seed, t))
        .collect::<Result<_, _>>()?;
    let overtakes = results.iter().filter(|r| r.overtook).count();
    let frequency = overtakes as f64 / runs as f64;
    Ok(RaceSummary {
        runs,
        overtakes,
        frequency,
        stderr: (frequency * (1.0 - frequency) / runs as f64).sqrt(),
        results,
    })
}
