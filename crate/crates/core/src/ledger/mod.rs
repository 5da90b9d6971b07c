//! UTXO accounting: transactions, blocks, chains and the per-party spending
//! statistics the consensus rules consume.
//!
//! Heights are 0-based block indices. Genesis allocations are created at
//! height 0 but are not a block, so a chain of `L` blocks has its tip at
//! height `L - 1`. Fees are burned and every block mints `reward` coins to
//! its creator, so at all times
//!
//! ```text
//! supply = genesis + len * reward - fees burned
//! ```

mod amount;
mod chain;
pub mod encode;
mod error;
mod types;

pub use amount::{Amount, FeeRate, COIN};
pub use chain::{apply_block, attribute_payment, Chain, LedgerParams, SpendRecord};
pub use error::LedgerError;
pub use types::{Allocation, Block, Output, OutputRef, PartyId, Transaction};

#[cfg(test)]
mod tests;
