//! Canonical byte layout used for digesting.
//!
//! All integers are 8-byte big-endian; digests are 32 raw bytes.
//!
//! ```text
//! block       = time | prev_digest | transaction* | creator | nonce
//! transaction = time | payer | payee | payment | fee | input_ref* | change
//! input_ref   = source_digest (32) | index (8)
//! genesis     = (party | amount)*
//! ```
//!
//! Amounts are written in base units. The layout carries no length prefixes;
//! it is only ever digested, never parsed back.

use super::types::{Allocation, Block, OutputRef, Transaction};

pub const OUTPUT_REF_LEN: usize = 40;
pub const NONCE_LEN: usize = 8;

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_be_bytes());
}

fn put_ref(buf: &mut Vec<u8>, r: &OutputRef) {
    buf.extend_from_slice(r.source.as_bytes());
    put_u64(buf, r.index);
}

fn put_transaction(buf: &mut Vec<u8>, tx: &Transaction) {
    put_u64(buf, tx.time);
    put_u64(buf, tx.payer.0);
    put_u64(buf, tx.payee.0);
    put_u64(buf, tx.payment.base());
    put_u64(buf, tx.fee.base());
    for input in &tx.inputs {
        put_ref(buf, input);
    }
    put_u64(buf, tx.change.base());
}

pub fn transaction_len(tx: &Transaction) -> usize {
    6 * 8 + tx.inputs.len() * OUTPUT_REF_LEN
}

pub fn transaction(tx: &Transaction) -> Vec<u8> {
    let mut buf = Vec::with_capacity(transaction_len(tx));
    put_transaction(&mut buf, tx);
    buf
}

/// Everything except the trailing nonce.
pub fn block_header(block: &Block) -> Vec<u8> {
    let tx_bytes: usize = block.transactions.iter().map(transaction_len).sum();
    let mut buf = Vec::with_capacity(8 + 32 + tx_bytes + 8 + NONCE_LEN);
    put_u64(&mut buf, block.time);
    buf.extend_from_slice(block.prev_digest.as_bytes());
    for tx in &block.transactions {
        put_transaction(&mut buf, tx);
    }
    put_u64(&mut buf, block.creator.0);
    buf
}

pub fn block(block: &Block) -> Vec<u8> {
    let mut buf = block_header(block);
    put_u64(&mut buf, block.nonce);
    buf
}

pub fn genesis(allocations: &[Allocation]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(allocations.len() * 16);
    for a in allocations {
        put_u64(&mut buf, a.party.0);
        put_u64(&mut buf, a.amount.base());
    }
    buf
}
