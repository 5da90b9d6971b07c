use std::fmt;

use serde::{Deserialize, Serialize};

use super::amount::Amount;
use super::encode;
use crate::consensus::digest::{sha256, Digest};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PartyId(pub u64);

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "party#{}", self.0)
    }
}

/// Reference to an output: the digest of whatever created it plus an index.
///
/// * genesis allocation `i`: `(genesis digest, i)`
/// * transaction outputs: `(txid, 0)` for the payment, `(txid, 1)` for change
/// * block reward: `(block digest, 0)`
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OutputRef {
    pub source: Digest,
    pub index: u64,
}

pub const PAYMENT_INDEX: u64 = 0;
pub const CHANGE_INDEX: u64 = 1;
pub const REWARD_INDEX: u64 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Output {
    pub owner: PartyId,
    pub amount: Amount,
    /// Height of the block that created this output; 0 for genesis.
    pub created_at: u64,
}

/// A payer-signed transfer.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub time: u64,
    pub payer: PartyId,
    pub payee: PartyId,
    pub payment: Amount,
    pub fee: Amount,
    pub inputs: Vec<OutputRef>,
    pub change: Amount,
    /// Simulated signature: a valid one echoes the payer id.
    pub signature: PartyId,
}

impl Transaction {
    pub fn id(&self) -> Digest {
        Digest(sha256(&encode::transaction(self)))
    }

    pub fn payment_ref(&self) -> OutputRef {
        OutputRef { source: self.id(), index: PAYMENT_INDEX }
    }

    pub fn change_ref(&self) -> OutputRef {
        OutputRef { source: self.id(), index: CHANGE_INDEX }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    pub time: u64,
    pub prev_digest: Digest,
    pub transactions: Vec<Transaction>,
    pub creator: PartyId,
    pub nonce: u64,
    /// Newly minted coins paid to `creator`.
    pub reward: Amount,
}

/// One genesis output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub party: PartyId,
    pub amount: Amount,
}

impl Allocation {
    pub fn new(party: PartyId, amount: Amount) -> Self {
        Allocation { party, amount }
    }

    /// `count` equal outputs totalling `amount`; the remainder goes to the last one.
    pub fn split(party: PartyId, amount: Amount, count: u64) -> Vec<Allocation> {
        let count = count.max(1);
        let each = amount.base() / count;
        let mut out: Vec<Allocation> =
            (0..count).map(|_| Allocation::new(party, Amount(each))).collect();
        let rem = amount.base() - each * count;
        if let Some(last) = out.last_mut() {
            last.amount = Amount(each + rem);
        }
        out
    }
}
