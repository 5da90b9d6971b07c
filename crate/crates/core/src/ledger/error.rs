use thiserror::Error;

use super::{Amount, OutputRef, PartyId};
use crate::consensus::digest::Digest;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("{party} needs {required} in outputs of age >= {min_age} but holds {available} (short by {shortfall})")]
    InsufficientFunds {
        party: PartyId,
        required: Amount,
        available: Amount,
        shortfall: Amount,
        min_age: u64,
    },
    #[error("unknown output reference {0:?}")]
    UnknownOutput(OutputRef),
    #[error("output {0:?} is already spent")]
    DoubleSpend(OutputRef),
    #[error("input {input:?} is owned by {owner}, not payer {payer}")]
    WrongOwner { input: OutputRef, owner: PartyId, payer: PartyId },
    #[error("signature does not match payer {0}")]
    BadSignature(PartyId),
    #[error("payment must be positive")]
    ZeroPayment,
    #[error("transaction has no inputs")]
    NoInputs,
    #[error("fee {actual} does not match fee rate (expected {expected})")]
    FeeMismatch { expected: Amount, actual: Amount },
    #[error("inputs {inputs} != payment + fee + change ({outputs})")]
    Unbalanced { inputs: Amount, outputs: Amount },
    #[error("prev digest {found} does not match tip {expected}")]
    PrevDigestMismatch { expected: Digest, found: Digest },
    #[error("block reward {found} differs from protocol reward {expected}")]
    RewardMismatch { expected: Amount, found: Amount },
    #[error("block time {found} precedes parent time {parent}")]
    TimeRegression { parent: u64, found: u64 },
    #[error("output {0:?} would be created twice")]
    DuplicateOutput(OutputRef),
    #[error("coin amount overflow")]
    Overflow,
}
