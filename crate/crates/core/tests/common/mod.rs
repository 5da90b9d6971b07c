//! Random small chains and brute-force reference scans over raw blocks.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spendchain::ledger::{Allocation, Amount, Block, Chain, FeeRate, LedgerParams, OutputRef, PartyId};

pub const PARTIES: u64 = 4;

pub struct RandomChain {
    pub chain: Chain,
    pub params: LedgerParams,
    pub genesis: Vec<Allocation>,
}

/// A chain of up to `max_len` blocks with a few random payments per block.
/// Blocks skip consensus; only the ledger rules apply.
pub fn random_chain(seed: u64, max_len: u64) -> RandomChain {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = LedgerParams::new(
        Amount::from_whole(rng.random_range(0..20)),
        FeeRate::from_per_coin([0.0, 0.01, 0.1, 0.5][rng.random_range(0..4)]).unwrap(),
    );
    let mut genesis = Vec::new();
    for p in 0..PARTIES {
        if rng.random_bool(0.8) {
            let pieces = rng.random_range(1..4);
            genesis.extend(Allocation::split(PartyId(p), Amount::from_whole(rng.random_range(1..200)), pieces));
        }
    }
    let mut chain = Chain::new(params, genesis.clone());
    let len = rng.random_range(0..=max_len);
    for _ in 0..len {
        let mut txs = Vec::new();
        for payer in 0..PARTIES {
            if !rng.random_bool(0.4) {
                continue;
            }
            let payee = PartyId(rng.random_range(0..PARTIES));
            let min_age = rng.random_range(0..3);
            let budget: u64 = chain.spendable(PartyId(payer), min_age).map(|(_, o)| o.amount.base()).sum();
            if budget < 2 {
                continue;
            }
            let amount = Amount(rng.random_range(1..=budget / 2));
            if let Ok(tx) = chain.make_transaction(PartyId(payer), payee, amount, min_age) {
                txs.push(tx);
            }
        }
        let block = Block {
            time: chain.tip_time() + rng.random_range(0..3),
            prev_digest: chain.tip_digest(),
            transactions: txs,
            creator: PartyId(rng.random_range(0..PARTIES)),
            nonce: rng.random(),
            reward: params.reward,
        };
        chain.apply_block(block).expect("generated block is valid");
    }
    RandomChain { chain, params, genesis }
}

/// Reference accounting computed directly from genesis and blocks.
pub struct Scan {
    pub len: u64,
    /// Per block: (payer, payment, inputs as (created_at, amount)).
    pub spends: Vec<Vec<(PartyId, Amount, Vec<(u64, Amount)>)>>,
    pub balances: HashMap<PartyId, u64>,
}

impl Scan {
    pub fn of(chain: &Chain) -> Scan {
        let mut outputs: HashMap<OutputRef, (PartyId, Amount, u64)> = HashMap::new();
        let gd = chain.genesis_digest();
        for (i, a) in chain.genesis().iter().enumerate() {
            outputs.insert(OutputRef { source: gd, index: i as u64 }, (a.party, a.amount, 0));
        }
        let mut spends = Vec::new();
        for (h, block) in chain.blocks().iter().enumerate() {
            let h = h as u64;
            let mut this = Vec::new();
            for tx in &block.transactions {
                let inputs = tx
                    .inputs
                    .iter()
                    .map(|r| {
                        let (_, amount, created) = outputs.remove(r).expect("input exists");
                        (created, amount)
                    })
                    .collect();
                this.push((tx.payer, tx.payment, inputs));
                let id = tx.id();
                outputs.insert(OutputRef { source: id, index: 0 }, (tx.payee, tx.payment, h));
                if !tx.change.is_zero() {
                    outputs.insert(OutputRef { source: id, index: 1 }, (tx.payer, tx.change, h));
                }
            }
            if !block.reward.is_zero() {
                let d = chain.block_digest(h).unwrap();
                outputs.insert(OutputRef { source: d, index: 0 }, (block.creator, block.reward, h));
            }
            spends.push(this);
        }
        let mut balances = HashMap::new();
        for (owner, amount, _) in outputs.values() {
            *balances.entry(*owner).or_insert(0) += amount.base();
        }
        Scan { len: chain.len(), spends, balances }
    }

    pub fn balance(&self, p: PartyId) -> Amount {
        Amount(self.balances.get(&p).copied().unwrap_or(0))
    }

    fn sum(&self, p: PartyId, f: u64, e: u64) -> Amount {
        let from = self.len.saturating_sub(f);
        let mut total = 0u64;
        for (h, block) in self.spends.iter().enumerate() {
            let h = h as u64;
            if h < from {
                continue;
            }
            for (payer, payment, inputs) in block {
                if *payer != p {
                    continue;
                }
                // oldest inputs cover the payment first
                let mut sorted = inputs.clone();
                sorted.sort_by_key(|(created, _)| *created);
                let mut left = payment.base();
                for (created, amount) in sorted {
                    let take = left.min(amount.base());
                    if h - created >= e {
                        total += take;
                    }
                    left -= take;
                }
            }
        }
        Amount(total)
    }

    pub fn spent_total(&self, p: PartyId) -> Amount {
        self.sum(p, u64::MAX, 0)
    }

    pub fn spent_recent(&self, p: PartyId, f: u64) -> Amount {
        self.sum(p, f, 0)
    }

    pub fn spent_old(&self, p: PartyId, e: u64) -> Amount {
        self.sum(p, u64::MAX, e)
    }

    pub fn spent_recent_old(&self, p: PartyId, f: u64, e: u64) -> Amount {
        self.sum(p, f, e)
    }
}
