use std::collections::{BTreeMap, HashMap, HashSet};

use super::amount::{Amount, FeeRate};
use super::error::LedgerError;
use super::types::{
    Allocation, Block, Output, OutputRef, PartyId, Transaction, CHANGE_INDEX, PAYMENT_INDEX,
    REWARD_INDEX,
};
use super::encode;
use crate::consensus::digest::{digest_block, sha256, Digest};

/// Protocol constants the ledger enforces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LedgerParams {
    /// Coins minted to each block's creator.
    pub reward: Amount,
    /// Fee per coin of payment. Fees are burned.
    pub fee_rate: FeeRate,
    /// Coin age whose aged-spend totals are kept as prefix sums. Queries for
    /// other ages fall back to a scan of the party's spend records.
    pub experience: u64,
}

impl LedgerParams {
    pub fn new(reward: Amount, fee_rate: FeeRate) -> Self {
        LedgerParams { reward, fee_rate, experience: 0 }
    }

    pub fn with_experience(mut self, experience: u64) -> Self {
        self.experience = experience;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct OutputRecord {
    output: Output,
    seq: u64,
    spent_at: Option<u64>,
}

/// One transaction's contribution to its payer's spending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpendRecord {
    pub height: u64,
    pub payment: Amount,
    /// `(age at spend height, payment share)`, oldest input first.
    pub portions: Vec<(u64, Amount)>,
    cum_total: u64,
    cum_old: u64,
}

impl SpendRecord {
    pub fn aged_portion(&self, min_age: u64) -> Amount {
        self.portions.iter().filter(|(age, _)| *age >= min_age).map(|(_, a)| *a).sum()
    }
}

/// Splits `payment` over inputs oldest-first. Inputs beyond the payment get no share.
pub fn attribute_payment(payment: Amount, mut inputs: Vec<(u64, Amount)>) -> Vec<(u64, Amount)> {
    inputs.sort_by_key(|&(age, _)| std::cmp::Reverse(age));
    let mut remaining = payment;
    let mut out = Vec::with_capacity(inputs.len());
    for (age, amount) in inputs {
        if remaining.is_zero() {
            break;
        }
        let share = amount.min(remaining);
        remaining = remaining - share;
        out.push((age, share));
    }
    out
}

#[derive(Debug)]
struct BlockDelta {
    digest: Digest,
    consumed: Vec<OutputRef>,
    created: Vec<(OutputRef, Output)>,
    spends: Vec<(PartyId, u64, Amount, Vec<(u64, Amount)>)>,
    fees: Amount,
}

/// An append-only block chain with its UTXO set and spending caches.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    params: LedgerParams,
    genesis: Vec<Allocation>,
    genesis_digest: Digest,
    blocks: Vec<Block>,
    digests: Vec<Digest>,
    outputs: HashMap<OutputRef, OutputRecord>,
    live: BTreeMap<PartyId, BTreeMap<(u64, u64), OutputRef>>,
    balances: BTreeMap<PartyId, Amount>,
    spends: BTreeMap<PartyId, Vec<SpendRecord>>,
    genesis_supply: Amount,
    minted: Amount,
    fees_burned: Amount,
    next_seq: u64,
}

impl Chain {
    pub fn new(params: LedgerParams, genesis: Vec<Allocation>) -> Self {
        let genesis_digest = Digest(sha256(&encode::genesis(&genesis)));
        let mut chain = Chain {
            params,
            genesis: genesis.clone(),
            genesis_digest,
            blocks: Vec::new(),
            digests: Vec::new(),
            outputs: HashMap::new(),
            live: BTreeMap::new(),
            balances: BTreeMap::new(),
            spends: BTreeMap::new(),
            genesis_supply: Amount::ZERO,
            minted: Amount::ZERO,
            fees_burned: Amount::ZERO,
            next_seq: 0,
        };
        for (i, alloc) in genesis.iter().enumerate() {
            chain.genesis_supply += alloc.amount;
            if alloc.amount.is_zero() {
                continue;
            }
            let r = OutputRef { source: genesis_digest, index: i as u64 };
            chain.insert_output(r, Output { owner: alloc.party, amount: alloc.amount, created_at: 0 });
        }
        chain
    }

    /// Rebuilds a chain by applying `blocks` in order from genesis.
    pub fn replay<'a, I>(params: LedgerParams, genesis: Vec<Allocation>, blocks: I) -> Result<Self, LedgerError>
    where
        I: IntoIterator<Item = &'a Block>,
    {
        let mut chain = Chain::new(params, genesis);
        for b in blocks {
            chain.apply_block(b.clone())?;
        }
        Ok(chain)
    }

    pub fn params(&self) -> &LedgerParams {
        &self.params
    }

    pub fn genesis(&self) -> &[Allocation] {
        &self.genesis
    }

    pub fn genesis_digest(&self) -> Digest {
        self.genesis_digest
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Number of blocks, genesis allocations excluded.
    pub fn len(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Digest the next block must reference.
    pub fn tip_digest(&self) -> Digest {
        self.digests.last().copied().unwrap_or(self.genesis_digest)
    }

    pub fn tip_time(&self) -> u64 {
        self.blocks.last().map_or(0, |b| b.time)
    }

    pub fn block_digest(&self, height: u64) -> Option<Digest> {
        self.digests.get(height as usize).copied()
    }

    pub fn balance(&self, party: PartyId) -> Amount {
        self.balances.get(&party).copied().unwrap_or_default()
    }

    /// Live outputs, in reference order.
    pub fn utxo(&self) -> BTreeMap<OutputRef, Output> {
        self.live
            .values()
            .flat_map(|m| m.values())
            .map(|r| (*r, self.outputs[r].output))
            .collect()
    }

    /// Every output ever created, live or spent.
    pub fn output(&self, r: &OutputRef) -> Option<&Output> {
        self.outputs.get(r).map(|rec| &rec.output)
    }

    pub fn is_live(&self, r: &OutputRef) -> bool {
        self.outputs.get(r).is_some_and(|rec| rec.spent_at.is_none())
    }

    pub fn total_supply(&self) -> Amount {
        self.balances.values().sum()
    }

    pub fn fees_burned(&self) -> Amount {
        self.fees_burned
    }

    pub fn genesis_supply(&self) -> Amount {
        self.genesis_supply
    }

    /// Supply implied by genesis, minted rewards and burned fees.
    pub fn expected_supply(&self) -> Amount {
        self.genesis_supply + self.minted - self.fees_burned
    }

    pub fn spend_records(&self, party: PartyId) -> &[SpendRecord] {
        self.spends.get(&party).map_or(&[], Vec::as_slice)
    }

    /// Σ payment over every transaction paid by `party`.
    pub fn spent_total(&self, party: PartyId) -> Amount {
        Amount(self.spend_records(party).last().map_or(0, |r| r.cum_total))
    }

    fn window_start(&self, freshness: u64) -> u64 {
        self.len().saturating_sub(freshness)
    }

    /// Spending within the last `min(freshness, len)` blocks.
    pub fn spent_recent(&self, party: PartyId, freshness: u64) -> Amount {
        let records = self.spend_records(party);
        let start = self.window_start(freshness);
        let idx = records.partition_point(|r| r.height < start);
        let before = if idx == 0 { 0 } else { records[idx - 1].cum_total };
        Amount(records.last().map_or(0, |r| r.cum_total) - before)
    }

    /// Payment funded by inputs at least `experience` blocks old at spend height.
    pub fn spent_old(&self, party: PartyId, experience: u64) -> Amount {
        let records = self.spend_records(party);
        if experience == self.params.experience {
            return Amount(records.last().map_or(0, |r| r.cum_old));
        }
        records.iter().map(|r| r.aged_portion(experience)).sum()
    }

    pub fn spent_recent_old(&self, party: PartyId, freshness: u64, experience: u64) -> Amount {
        let records = self.spend_records(party);
        let start = self.window_start(freshness);
        let idx = records.partition_point(|r| r.height < start);
        if experience == self.params.experience {
            let before = if idx == 0 { 0 } else { records[idx - 1].cum_old };
            return Amount(records.last().map_or(0, |r| r.cum_old) - before);
        }
        records[idx..].iter().map(|r| r.aged_portion(experience)).sum()
    }

    /// Age of an output: at its spend height if consumed, otherwise at the tip.
    pub fn coin_age(&self, r: &OutputRef) -> Result<u64, LedgerError> {
        let rec = self.outputs.get(r).ok_or(LedgerError::UnknownOutput(*r))?;
        let at = rec.spent_at.unwrap_or_else(|| self.len().saturating_sub(1));
        Ok(at.saturating_sub(rec.output.created_at))
    }

    /// Live outputs of `party`, oldest first, that will be at least `min_age`
    /// old when spent in the next block.
    pub fn spendable(&self, party: PartyId, min_age: u64) -> impl Iterator<Item = (OutputRef, Output)> + '_ {
        let spend_height = self.len();
        self.live
            .get(&party)
            .into_iter()
            .flat_map(|m| m.values())
            .map(|r| (*r, self.outputs[r].output))
            .take_while(move |(_, o)| spend_height.saturating_sub(o.created_at) >= min_age)
    }

    /// Builds a payment for inclusion in the next block, consuming eligible
    /// outputs oldest-first and returning exact change to the payer.
    pub fn make_transaction(
        &self,
        payer: PartyId,
        payee: PartyId,
        payment: Amount,
        min_age: u64,
    ) -> Result<Transaction, LedgerError> {
        if payment.is_zero() {
            return Err(LedgerError::ZeroPayment);
        }
        let fee = self.params.fee_rate.fee_for(payment);
        let required = payment.checked_add(fee).ok_or(LedgerError::Overflow)?;
        let mut inputs = Vec::new();
        let mut gathered = Amount::ZERO;
        for (r, o) in self.spendable(payer, min_age) {
            inputs.push(r);
            gathered += o.amount;
            if gathered >= required {
                break;
            }
        }
        if gathered < required {
            return Err(LedgerError::InsufficientFunds {
                party: payer,
                required,
                available: gathered,
                shortfall: required - gathered,
                min_age,
            });
        }
        Ok(Transaction {
            time: self.tip_time(),
            payer,
            payee,
            payment,
            fee,
            inputs,
            change: gathered - required,
            signature: payer,
        })
    }

    /// Checks a block against the current tip without modifying the chain.
    pub fn validate_block(&self, block: &Block) -> Result<Digest, LedgerError> {
        self.delta(block).map(|d| d.digest)
    }

    /// Appends a block, or rejects it leaving the chain untouched.
    pub fn apply_block(&mut self, block: Block) -> Result<Digest, LedgerError> {
        let delta = self.delta(&block)?;
        let height = self.len();
        for (r, o) in delta.created {
            self.insert_output(r, o);
        }
        for r in &delta.consumed {
            self.remove_output(r, height);
        }
        for (party, h, payment, portions) in delta.spends {
            let records = self.spends.entry(party).or_default();
            let (prev_total, prev_old) = records.last().map_or((0, 0), |r| (r.cum_total, r.cum_old));
            let old: Amount = portions
                .iter()
                .filter(|(age, _)| *age >= self.params.experience)
                .map(|(_, a)| *a)
                .sum();
            records.push(SpendRecord {
                height: h,
                payment,
                portions,
                cum_total: prev_total + payment.base(),
                cum_old: prev_old + old.base(),
            });
        }
        self.fees_burned += delta.fees;
        self.minted += block.reward;
        self.digests.push(delta.digest);
        self.blocks.push(block);
        Ok(delta.digest)
    }

    fn insert_output(&mut self, r: OutputRef, output: Output) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.live.entry(output.owner).or_default().insert((output.created_at, seq), r);
        *self.balances.entry(output.owner).or_default() += output.amount;
        self.outputs.insert(r, OutputRecord { output, seq, spent_at: None });
    }

    fn remove_output(&mut self, r: &OutputRef, height: u64) {
        let rec = self.outputs.get_mut(r).expect("validated input");
        rec.spent_at = Some(height);
        let o = rec.output;
        let seq = rec.seq;
        if let Some(m) = self.live.get_mut(&o.owner) {
            m.remove(&(o.created_at, seq));
        }
        let bal = self.balances.get_mut(&o.owner).expect("owner has a balance");
        *bal = *bal - o.amount;
    }

    fn delta(&self, block: &Block) -> Result<BlockDelta, LedgerError> {
        let height = self.len();
        let expected = self.tip_digest();
        if block.prev_digest != expected {
            return Err(LedgerError::PrevDigestMismatch { expected, found: block.prev_digest });
        }
        if block.time < self.tip_time() {
            return Err(LedgerError::TimeRegression { parent: self.tip_time(), found: block.time });
        }
        if block.reward != self.params.reward {
            return Err(LedgerError::RewardMismatch { expected: self.params.reward, found: block.reward });
        }

        let mut spent: HashSet<OutputRef> = HashSet::new();
        let mut pending: HashMap<OutputRef, Output> = HashMap::new();
        let mut delta = BlockDelta {
            digest: digest_block(block),
            consumed: Vec::new(),
            created: Vec::new(),
            spends: Vec::new(),
            fees: Amount::ZERO,
        };

        for tx in &block.transactions {
            if tx.signature != tx.payer {
                return Err(LedgerError::BadSignature(tx.payer));
            }
            if tx.payment.is_zero() {
                return Err(LedgerError::ZeroPayment);
            }
            if tx.inputs.is_empty() {
                return Err(LedgerError::NoInputs);
            }
            let expected_fee = self.params.fee_rate.fee_for(tx.payment);
            if tx.fee != expected_fee {
                return Err(LedgerError::FeeMismatch { expected: expected_fee, actual: tx.fee });
            }

            let mut total_in = Amount::ZERO;
            let mut aged = Vec::with_capacity(tx.inputs.len());
            for input in &tx.inputs {
                if !spent.insert(*input) {
                    return Err(LedgerError::DoubleSpend(*input));
                }
                let output = match pending.get(input) {
                    Some(o) => *o,
                    None => match self.outputs.get(input) {
                        Some(rec) if rec.spent_at.is_none() => rec.output,
                        Some(_) => return Err(LedgerError::DoubleSpend(*input)),
                        None => return Err(LedgerError::UnknownOutput(*input)),
                    },
                };
                if output.owner != tx.payer {
                    return Err(LedgerError::WrongOwner { input: *input, owner: output.owner, payer: tx.payer });
                }
                total_in = total_in.checked_add(output.amount).ok_or(LedgerError::Overflow)?;
                aged.push((height - output.created_at, output.amount));
            }
            let total_out = tx
                .payment
                .checked_add(tx.fee)
                .and_then(|a| a.checked_add(tx.change))
                .ok_or(LedgerError::Overflow)?;
            if total_in != total_out {
                return Err(LedgerError::Unbalanced { inputs: total_in, outputs: total_out });
            }

            let txid = tx.id();
            let mut outs = vec![(
                OutputRef { source: txid, index: PAYMENT_INDEX },
                Output { owner: tx.payee, amount: tx.payment, created_at: height },
            )];
            if !tx.change.is_zero() {
                outs.push((
                    OutputRef { source: txid, index: CHANGE_INDEX },
                    Output { owner: tx.payer, amount: tx.change, created_at: height },
                ));
            }
            for (r, o) in outs {
                if self.outputs.contains_key(&r) || pending.insert(r, o).is_some() {
                    return Err(LedgerError::DuplicateOutput(r));
                }
                delta.created.push((r, o));
            }
            delta.consumed.extend(tx.inputs.iter().copied());
            delta.fees = delta.fees.checked_add(tx.fee).ok_or(LedgerError::Overflow)?;
            delta.spends.push((tx.payer, height, tx.payment, attribute_payment(tx.payment, aged)));
        }

        if !block.reward.is_zero() {
            let r = OutputRef { source: delta.digest, index: REWARD_INDEX };
            if self.outputs.contains_key(&r) {
                return Err(LedgerError::DuplicateOutput(r));
            }
            delta.created.push((r, Output { owner: block.creator, amount: block.reward, created_at: height }));
        }
        Ok(delta)
    }
}

/// Functional form of [`Chain::apply_block`].
pub fn apply_block(chain: &Chain, block: Block) -> Result<Chain, LedgerError> {
    let mut next = chain.clone();
    next.apply_block(block)?;
    Ok(next)
}
