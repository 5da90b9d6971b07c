//! Party behaviours and the economics of solo chain building.
//!
//! A party spending `S` coins per block pays `S * FPC` in burned fees and
//! collects `Rwd` for each block it mines, so its balance moves by
//! `Rwd - S * FPC` per block. `S = Rwd / FPC` is the largest spend rate a
//! party can keep up without outside income; the self-spending adversary
//! runs at `S = (Rwd / FPC) * WR` for a work ratio `WR` in `(0, 1]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{ConsensusRule, RuleKind};
use crate::ledger::{Allocation, Amount, Chain, LedgerError, LedgerParams, PartyId, Transaction};
use crate::simulator::{self, ChainBuildConfig, SimError, SimMode, TrialStats};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategyKind {
    /// Pays `S` per block to the listed parties in rotation. With no
    /// recipients the party pays itself, which models the honest majority as
    /// a single aggregate party moving coins between its own nodes.
    Honest { recipients: Vec<PartyId> },
    /// Pays `S` per block to itself.
    SelfSpend,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub spend_per_block: Amount,
    pub work_ratio: f64,
    /// Minimum input age, 0 unless coins must be aged for the rule.
    pub min_age: u64,
}

impl Strategy {
    /// Spends nothing; mines empty blocks.
    pub fn idle() -> Self {
        Strategy { kind: StrategyKind::SelfSpend, spend_per_block: Amount::ZERO, work_ratio: 0.0, min_age: 0 }
    }

    /// `S = floor((Rwd / FPC) * WR)` in base units.
    pub fn self_spend(params: &LedgerParams, work_ratio: f64, min_age: u64) -> Self {
        Strategy {
            kind: StrategyKind::SelfSpend,
            spend_per_block: spend_for_ratio(params, work_ratio),
            work_ratio,
            min_age,
        }
    }

    /// Self-spending at an explicit rate; `work_ratio` is derived from it.
    pub fn self_spend_amount(params: &LedgerParams, spend_per_block: Amount, min_age: u64) -> Self {
        let work_ratio = params
            .fee_rate
            .sustainable_spend(params.reward)
            .filter(|s| !s.is_zero())
            .map_or(0.0, |s| spend_per_block.to_coins() / s.to_coins());
        Strategy { kind: StrategyKind::SelfSpend, spend_per_block, work_ratio, min_age }
    }

    pub fn honest(params: &LedgerParams, work_ratio: f64, recipients: Vec<PartyId>, min_age: u64) -> Self {
        Strategy {
            kind: StrategyKind::Honest { recipients },
            spend_per_block: spend_for_ratio(params, work_ratio),
            work_ratio,
            min_age,
        }
    }

    pub fn with_min_age(mut self, min_age: u64) -> Self {
        self.min_age = min_age;
        self
    }
}

fn spend_for_ratio(params: &LedgerParams, work_ratio: f64) -> Amount {
    match params.fee_rate.sustainable_spend(params.reward) {
        Some(s) => Amount((s.base() as f64 * work_ratio).floor() as u64),
        None => Amount::ZERO,
    }
}

/// Transactions `party` puts in its next block on `chain`. An error means the
/// party cannot fund its planned spend; the caller decides whether that ends
/// the run or the party mines an empty block.
pub fn plan_block_transactions(strategy: &Strategy, party: PartyId, chain: &Chain) -> Result<Vec<Transaction>, LedgerError> {
    if strategy.spend_per_block.is_zero() {
        return Ok(Vec::new());
    }
    let payee = match &strategy.kind {
        StrategyKind::SelfSpend => party,
        StrategyKind::Honest { recipients } if recipients.is_empty() => party,
        StrategyKind::Honest { recipients } => recipients[(chain.len() % recipients.len() as u64) as usize],
    };
    let tx = chain.make_transaction(party, payee, strategy.spend_per_block, strategy.min_age)?;
    Ok(vec![tx])
}

#[derive(Debug, Error)]
pub enum EconomicsError {
    #[error("{0}")]
    Sim(#[from] SimError),
    #[error("strategy must overspend (S * FPC > Rwd) for a sustainability check")]
    NotOverspending,
    #[error("earning rate needs a windowed rule (PRS or RSO), got {0}")]
    NotWindowed(RuleKind),
    #[error("work ratio must be in (0, 1), got {0}")]
    WorkRatio(f64),
    #[error("balance moved by {found} at height {height}, expected {expected}")]
    DrainMismatch { height: u64, expected: i128, found: i128 },
}

/// Balance change per self-funded block, in base units: `Rwd - fee(S)`.
pub fn balance_delta_per_block(params: &LedgerParams, spend_per_block: Amount) -> i128 {
    let fee = if spend_per_block.is_zero() { Amount::ZERO } else { params.fee_rate.fee_for(spend_per_block) };
    params.reward.base() as i128 - fee.base() as i128
}

/// First height at which a solo builder that starts with `initial` and drains
/// `-delta` per block can no longer fund `S + fee`. `None` if it never runs out.
pub fn predicted_failure_height(params: &LedgerParams, spend_per_block: Amount, initial: Amount) -> Option<u64> {
    if spend_per_block.is_zero() {
        return None;
    }
    let need = (spend_per_block + params.fee_rate.fee_for(spend_per_block)).base() as i128;
    let delta = balance_delta_per_block(params, spend_per_block);
    let b0 = initial.base() as i128;
    if b0 < need {
        return Some(0);
    }
    if delta >= 0 {
        return None;
    }
    Some(((b0 - need) / -delta + 1) as u64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SustainabilityReport {
    /// Height at which the builder could not fund its spend, if it happened.
    pub failure_height: Option<u64>,
    /// Builder balance before each block it built, then the final balance.
    pub balances: Vec<Amount>,
    pub delta_per_block: i128,
    /// `initial / (S * FPC - Rwd) + 1`; `None` unless the strategy overspends.
    pub upper_bound: Option<f64>,
}

/// Builds a solo chain of up to `max_blocks` blocks and checks that the
/// builder's balance moves by exactly `Rwd - S * FPC` per block until the plan
/// becomes infeasible. Works for any spend rate; [`overspend_check`] is the
/// strict form that requires a draining strategy.
pub fn sustainability_check(
    cfg: &ChainBuildConfig,
    max_blocks: u64,
    seed: u64,
) -> Result<SustainabilityReport, EconomicsError> {
    let cfg = ChainBuildConfig { length: max_blocks, stop_on_infeasible: true, ..cfg.clone() };
    let (outcome, _) = simulator::run_chain_trial(&cfg, seed, 0)?;
    let delta = balance_delta_per_block(&cfg.params, cfg.strategy.spend_per_block);
    for (h, pair) in outcome.balances.windows(2).enumerate() {
        let found = pair[1].base() as i128 - pair[0].base() as i128;
        if found != delta {
            return Err(EconomicsError::DrainMismatch { height: h as u64, expected: delta, found });
        }
    }
    let initial = outcome.balances.first().copied().unwrap_or_default();
    let upper_bound = (delta < 0).then(|| initial.base() as f64 / (-delta) as f64 + 1.0);
    if let (Some(bound), Some(f)) = (upper_bound, &outcome.failure) {
        debug_assert!((f.blocks_built as f64) <= bound);
    }
    Ok(SustainabilityReport {
        failure_height: outcome.failure.map(|f| f.blocks_built),
        balances: outcome.balances,
        delta_per_block: delta,
        upper_bound,
    })
}

/// [`sustainability_check`] restricted to strategies with `S * FPC > Rwd`.
pub fn overspend_check(cfg: &ChainBuildConfig, max_blocks: u64, seed: u64) -> Result<SustainabilityReport, EconomicsError> {
    if balance_delta_per_block(&cfg.params, cfg.strategy.spend_per_block) >= 0 {
        return Err(EconomicsError::NotOverspending);
    }
    sustainability_check(cfg, max_blocks, seed)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EarningRate {
    pub work_ratio: f64,
    /// Measured coins per tick in steady state.
    pub measured: f64,
    /// `(F / 2^D) * (Rwd^2 / FPC) * WR * (1 - WR)`.
    pub formula: f64,
    /// `Rwd (1 - WR) (1 + F S WR) / 2^D`, the steady-state value without the
    /// large-window approximation.
    pub exact: f64,
    pub earned_per_block: Amount,
    pub block_time: TrialStats,
}

#[derive(Clone, Debug)]
pub struct EarningSetup {
    pub rule: ConsensusRule,
    pub params: LedgerParams,
    pub work_ratio: f64,
    pub hashrate: f64,
    /// Steady-state blocks measured per trial, after the window fills.
    pub measured_blocks: u64,
    pub mode: SimMode,
}

/// Measures the self-spending adversary's steady-state earnings per tick
/// under a windowed rule and pairs it with the closed-form rate.
pub fn adversary_earning_rate(setup: &EarningSetup, trials: usize, seed: u64) -> Result<EarningRate, EconomicsError> {
    let rule = setup.rule;
    if !rule.kind.uses_freshness() {
        return Err(EconomicsError::NotWindowed(rule.kind));
    }
    let wr = setup.work_ratio;
    if !(wr > 0.0 && wr < 1.0) {
        return Err(EconomicsError::WorkRatio(wr));
    }
    let params = setup.params.with_experience(rule.min_age());
    let adversary = PartyId(1);
    let bootstrap = PartyId(0);
    let strategy = Strategy::self_spend(&params, wr, rule.min_age());
    let per_block_need = strategy.spend_per_block + params.fee_rate.fee_for(strategy.spend_per_block);
    // Enough aged coins to bridge the first E blocks, in small outputs so change stays small.
    let funding = per_block_need.checked_mul(rule.min_age() + 2).ok_or(SimError::Overflow)?;
    let pieces = (rule.min_age() + 2) * 4;
    let warmup = rule.freshness + rule.min_age();
    let cfg = ChainBuildConfig {
        rule,
        params,
        genesis: Allocation::split(adversary, funding, pieces),
        builder: adversary,
        hashrate: setup.hashrate,
        strategy: strategy.clone(),
        length: warmup + setup.measured_blocks,
        prefix_blocks: rule.min_age(),
        prefix_creator: bootstrap,
        mode: setup.mode,
        stop_on_infeasible: true,
    };
    let report = simulator::run_chain_build(&cfg, trials, seed)?;
    // Coins gained over the steady window, read off the ledger, per tick spent mining.
    let skip = warmup as usize;
    let (mut gained, mut elapsed) = (0i128, 0.0);
    let mut steady = Vec::new();
    for t in report.trials.iter().filter(|t| t.failure.is_none()) {
        gained += t.balances[t.balances.len() - 1].base() as i128 - t.balances[skip].base() as i128;
        elapsed += t.block_times[skip..].iter().sum::<f64>();
        steady.extend_from_slice(&t.block_times[skip..]);
    }
    if steady.is_empty() {
        return Err(SimError::NoTrials.into());
    }
    let block_time = TrialStats::from_samples(&steady);
    let earned = balance_delta_per_block(&params, strategy.spend_per_block);
    let earned_coins = earned as f64 / crate::ledger::COIN as f64;
    let f = rule.freshness as f64;
    let two_d = 2f64.powi(rule.difficulty as i32);
    let rwd = params.reward.to_coins();
    let fpc = params.fee_rate.per_coin();
    let s = strategy.spend_per_block.to_coins();
    Ok(EarningRate {
        work_ratio: wr,
        measured: gained as f64 / crate::ledger::COIN as f64 / elapsed,
        formula: (f / two_d) * (rwd * rwd / fpc) * wr * (1.0 - wr),
        exact: earned_coins * (1.0 + f * s) / two_d,
        earned_per_block: Amount(earned.max(0) as u64),
        block_time,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceRequirement {
    /// `E * (Rwd / FPC) * WR`: aged coins needed to keep spending for `E` blocks.
    pub required: Amount,
    /// `(FPC / Rwd) * CN`: the experience at which the requirement reaches `CN * WR`.
    pub experience_threshold: f64,
    /// `CN * WR`.
    pub network_bound: Amount,
    /// Whether `E >= (FPC / Rwd) * CN`.
    pub experience_exceeds_threshold: bool,
    /// Holds whenever the implication `E >= threshold => required >= CN * WR` does.
    pub implication_holds: bool,
}

impl BalanceRequirement {
    pub fn met_by(&self, balance: Amount) -> bool {
        balance >= self.required
    }
}

/// Balance an aged-coin spender needs. `sustainable_spend` is `Rwd / FPC`.
pub fn pso_balance_requirement(experience: u64, sustainable_spend: Amount, work_ratio: f64, network_coins: Amount) -> BalanceRequirement {
    let required = Amount((experience as f64 * sustainable_spend.base() as f64 * work_ratio).round() as u64);
    let experience_threshold = if sustainable_spend.is_zero() {
        f64::INFINITY
    } else {
        network_coins.base() as f64 / sustainable_spend.base() as f64
    };
    let network_bound = Amount((network_coins.base() as f64 * work_ratio).round() as u64);
    let exceeds = experience as f64 >= experience_threshold;
    BalanceRequirement {
        required,
        experience_threshold,
        network_bound,
        experience_exceeds_threshold: exceeds,
        implication_holds: !exceeds || required >= network_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::{Allocation, FeeRate};

    fn params() -> LedgerParams {
        LedgerParams::new(Amount::from_whole(50), FeeRate::from_per_coin(0.1).unwrap())
    }

    fn funded(party: PartyId, coins: u64) -> Chain {
        Chain::new(params(), vec![Allocation::new(party, Amount::from_whole(coins))])
    }

    #[test]
    fn full_ratio_pays_reward_in_fees() {
        let a = PartyId(1);
        let s = Strategy::self_spend(&params(), 1.0, 0);
        assert_eq!(s.spend_per_block, Amount::from_whole(500));
        let txs = plan_block_transactions(&s, a, &funded(a, 1000)).unwrap();
        assert_eq!(txs.len(), 1);
        assert_eq!(txs[0].payee, a);
        assert_eq!(txs[0].payment, Amount::from_whole(500));
        assert_eq!(txs[0].fee, Amount::from_whole(50));
        assert_eq!(balance_delta_per_block(&params(), s.spend_per_block), 0);
    }

    #[test]
    fn half_ratio_earns_half_reward() {
        let a = PartyId(1);
        let s = Strategy::self_spend(&params(), 0.5, 0);
        let txs = plan_block_transactions(&s, a, &funded(a, 1000)).unwrap();
        assert_eq!(txs[0].payment, Amount::from_whole(250));
        assert_eq!(txs[0].fee, Amount::from_whole(25));
        assert_eq!(balance_delta_per_block(&params(), s.spend_per_block), Amount::from_whole(25).base() as i128);
    }

    #[test]
    fn underfunded_plan_is_infeasible() {
        let a = PartyId(1);
        let s = Strategy::self_spend(&params(), 1.0, 0);
        let err = plan_block_transactions(&s, a, &funded(a, 549)).unwrap_err();
        assert!(matches!(err, LedgerError::InsufficientFunds { .. }));
    }

    #[test]
    fn honest_rotates_recipients() {
        let a = PartyId(1);
        let s = Strategy::honest(&params(), 0.1, vec![PartyId(2), PartyId(3)], 0);
        let txs = plan_block_transactions(&s, a, &funded(a, 1000)).unwrap();
        assert_eq!(txs[0].payee, PartyId(2));
        let own = Strategy::honest(&params(), 0.1, vec![], 0);
        assert_eq!(plan_block_transactions(&own, a, &funded(a, 1000)).unwrap()[0].payee, a);
    }

    #[test]
    fn idle_plans_nothing() {
        let a = PartyId(1);
        assert!(plan_block_transactions(&Strategy::idle(), a, &funded(a, 0)).unwrap().is_empty());
    }

    #[test]
    fn predicted_failure_is_linear_drain() {
        // need 660, drain 10: balance 1000 - 10h >= 660 up to h = 34
        let p = params();
        assert_eq!(predicted_failure_height(&p, Amount::from_whole(600), Amount::from_whole(1000)), Some(35));
        assert_eq!(predicted_failure_height(&p, Amount::from_whole(500), Amount::from_whole(1000)), None);
        assert_eq!(predicted_failure_height(&p, Amount::from_whole(400), Amount::from_whole(1000)), None);
        assert_eq!(predicted_failure_height(&p, Amount::from_whole(600), Amount::from_whole(100)), Some(0));
    }

    #[test]
    fn balance_requirement_examples() {
        let r = pso_balance_requirement(100, Amount::from_whole(500), 1.0, Amount::from_whole(1_000_000));
        assert_eq!(r.required, Amount::from_whole(50_000));

        let r = pso_balance_requirement(2000, Amount::from_whole(500), 0.5, Amount::from_whole(1_000_000));
        assert_eq!(r.experience_threshold, 2000.0);
        assert!(r.experience_exceeds_threshold);
        assert_eq!(r.required, Amount::from_whole(500_000));
        assert_eq!(r.network_bound, Amount::from_whole(500_000));
        assert!(r.implication_holds);

        let r = pso_balance_requirement(0, Amount::from_whole(500), 0.5, Amount::from_whole(1_000_000));
        assert_eq!(r.required, Amount::ZERO);
        assert!(!r.experience_exceeds_threshold);
        assert!(r.met_by(Amount::ZERO));
    }
}
