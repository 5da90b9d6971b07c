//! Proof-of-spending block chains.
//!
//! A UTXO ledger, the proof-of-work / balance / spending family of block
//! validity rules, and a seeded Monte Carlo simulator for measuring how fast
//! parties can grow chains under each rule.
//!
//! * [`ledger`]: amounts, transactions, blocks, chains and spending statistics
//! * [`consensus`]: digests, fractional-difficulty targets, validity, fork choice
//! * [`simulator`]: geometric and nonce-grinding block races
//! * [`strategies`]: honest and self-spending behaviours, adversary economics
//! * [`cli`]: experiment configuration, closed-form values, CSV records

pub mod cli;
pub mod consensus;
pub mod ledger;
pub mod simulator;
pub mod strategies;

pub use consensus::{ConsensusRule, Digest, RuleKind};
pub use ledger::{Allocation, Amount, Block, Chain, FeeRate, LedgerParams, PartyId, Transaction};
