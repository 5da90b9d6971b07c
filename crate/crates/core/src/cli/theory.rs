use serde::Serialize;

use super::SimConfig;
use crate::consensus::RuleKind;
use crate::ledger::Amount;
use crate::strategies::Strategy;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoreticalTime {
    /// Closed-form large-`L` approximation; `None` where it diverges.
    /// It leaves out the first block, which is mined at proof-of-work difficulty.
    pub asymptotic: Option<f64>,
    /// `Σ_{i<L} 2^D / (1 + s_i)` over the statistic `s_i` the builder faces at block `i`.
    pub exact_oracle: f64,
    /// Same sum with each term floored at one attempt, as the success
    /// probability cannot exceed 1.
    pub exact_capped: f64,
    /// First-block term of `exact_capped`.
    pub first_block: f64,
}

/// Expected ticks for block `i` at statistic `s` (coins), uncapped and capped.
pub fn block_time(difficulty: u32, statistic: f64, hashrate: f64) -> (f64, f64) {
    let t = 2f64.powi(difficulty as i32) / (1.0 + statistic);
    (t / hashrate, t.max(1.0) / hashrate)
}

/// Statistic the solo builder faces at its `i`-th block (0-based), in coins.
pub fn statistic_at(cfg: &SimConfig, i: u64) -> f64 {
    let params = cfg.ledger_params();
    let s = Strategy::self_spend(&params, cfg.work_ratio, 0).spend_per_block;
    let s_coins = s.to_coins();
    match cfg.rule {
        RuleKind::Pow => 0.0,
        RuleKind::Pob => {
            let builder = cfg.builder();
            let b0: Amount = cfg.allocations().iter().filter(|a| a.party == builder).map(|a| a.amount).sum();
            let fee = if s.is_zero() { Amount::ZERO } else { params.fee_rate.fee_for(s) };
            b0.to_coins() + i as f64 * (params.reward.to_coins() - fee.to_coins())
        }
        RuleKind::Psp | RuleKind::Pso => i as f64 * s_coins,
        RuleKind::Prs | RuleKind::Rso => i.min(cfg.freshness) as f64 * s_coins,
    }
}

pub fn theoretical_time(cfg: &SimConfig) -> TheoreticalTime {
    let hashrate = cfg.hashrate(cfg.builder());
    let d = cfg.difficulty;
    let two_d = 2f64.powi(d as i32);
    let (mut exact, mut capped) = (0.0, 0.0);
    for i in 0..cfg.length {
        let (u, c) = block_time(d, statistic_at(cfg, i), hashrate);
        exact += u;
        capped += c;
    }
    let l = cfg.length as f64;
    let wr = cfg.work_ratio;
    let fpc_over_rwd = cfg.fee_per_coin / cfg.reward;
    let asymptotic = match cfg.rule {
        RuleKind::Pow => Some(l * two_d),
        RuleKind::Pob => {
            let params = cfg.ledger_params();
            let s = Strategy::self_spend(&params, wr, 0).spend_per_block;
            let fpb = if s.is_zero() { 0.0 } else { params.fee_rate.fee_for(s).to_coins() };
            let net = cfg.reward - fpb;
            (net > 0.0).then(|| two_d * l.ln() / net)
        }
        RuleKind::Psp => Some(two_d / wr * fpc_over_rwd * (EULER_GAMMA + l.ln())),
        RuleKind::Pso => Some(two_d * fpc_over_rwd / wr * l.ln()),
        RuleKind::Prs | RuleKind::Rso => Some(two_d / cfg.freshness as f64 * fpc_over_rwd / wr * l),
    }
    .filter(|v| v.is_finite())
    .map(|v| v / hashrate);
    TheoreticalTime {
        asymptotic,
        exact_oracle: exact,
        exact_capped: capped,
        first_block: block_time(d, statistic_at(cfg, 0), hashrate).1,
    }
}

/// Steady-state ticks per block for a windowed rule: `2^D / (1 + F S)`.
pub fn steady_block_time(cfg: &SimConfig) -> Option<f64> {
    cfg.rule.uses_freshness().then(|| {
        let s = statistic_at(cfg, cfg.freshness);
        block_time(cfg.difficulty, s, cfg.hashrate(cfg.builder())).1
    })
}

/// `(F / 2^D) (Rwd^2 / FPC) WR (1 - WR)` coins per tick.
pub fn earning_rate_formula(freshness: u64, difficulty: u32, reward: f64, fee_per_coin: f64, work_ratio: f64) -> f64 {
    freshness as f64 / 2f64.powi(difficulty as i32) * reward * reward / fee_per_coin * work_ratio * (1.0 - work_ratio)
}
