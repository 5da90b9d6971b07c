//! The block digest model.
//!
//! A block digest is a 256-bit unsigned integer, stored big-endian so that
//! byte-wise ordering equals numeric ordering. It is computed as
//!
//! ```text
//! digest(B) = SHA-256(header(B)) XOR (mix64(B.nonce) << 192)
//! ```
//!
//! where `header(B)` is the canonical block serialization without its
//! trailing 8-byte nonce (see [`crate::ledger::encode`]) and `mix64` is the
//! SplitMix64 finalizer, a bijection on 64-bit words. Over random blocks the
//! digest is uniform on `[0, 2^256)`. Over successive nonces of a fixed header
//! the top 64 bits are a well-mixed permutation, which is what explicit
//! nonce grinding relies on. Because `mix64` is invertible, a nonce can also be
//! solved for a chosen top word in O(1); geometric-mode simulation uses this to
//! realize a winning block without grinding.

use std::fmt;

use num_bigint::BigUint;
use sha2::{Digest as _, Sha256};

use crate::ledger::{encode, Block};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const ZERO: Digest = Digest([0; 32]);
    pub const MAX: Digest = Digest([0xff; 32]);

    pub fn from_u64(v: u64) -> Self {
        let mut bytes = [0u8; 32];
        bytes[24..].copy_from_slice(&v.to_be_bytes());
        Digest(bytes)
    }

    /// `2^exp`, for `exp < 256`.
    pub fn pow2(exp: u32) -> Self {
        assert!(exp < 256, "2^{exp} does not fit in 256 bits");
        let mut bytes = [0u8; 32];
        let byte = 31 - (exp / 8) as usize;
        bytes[byte] = 1 << (exp % 8);
        Digest(bytes)
    }

    pub fn from_biguint(v: &BigUint) -> Option<Self> {
        let raw = v.to_bytes_be();
        if raw.len() > 32 {
            return None;
        }
        let mut bytes = [0u8; 32];
        bytes[32 - raw.len()..].copy_from_slice(&raw);
        Some(Digest(bytes))
    }

    pub fn to_biguint(&self) -> BigUint {
        BigUint::from_bytes_be(&self.0)
    }

    /// Most significant 64 bits.
    pub fn top64(&self) -> u64 {
        u64::from_be_bytes(self.0[..8].try_into().unwrap())
    }

    /// Low 192 bits, compared as a big-endian byte string.
    pub fn low192(&self) -> &[u8] {
        &self.0[8..]
    }

    pub fn with_top64(&self, top: u64) -> Self {
        let mut bytes = self.0;
        bytes[..8].copy_from_slice(&top.to_be_bytes());
        Digest(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({self})")
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// Number of leading zero bits; 256 for the zero digest.
pub fn nlz(digest: &Digest) -> u32 {
    let mut count = 0;
    for &b in &digest.0 {
        if b == 0 {
            count += 8;
        } else {
            return count + b.leading_zeros();
        }
    }
    count
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

const MIX_C1: u64 = 0xbf58_476d_1ce4_e5b9;
const MIX_C2: u64 = 0x94d0_49bb_1331_11eb;

const fn mod_inverse(c: u64) -> u64 {
    // Newton iteration; each step doubles the number of correct low bits.
    let mut inv = c;
    let mut i = 0;
    while i < 6 {
        inv = inv.wrapping_mul(2u64.wrapping_sub(c.wrapping_mul(inv)));
        i += 1;
    }
    inv
}

const MIX_C1_INV: u64 = mod_inverse(MIX_C1);
const MIX_C2_INV: u64 = mod_inverse(MIX_C2);

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_C1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_C2);
    z ^ (z >> 31)
}

fn unshift_xor(y: u64, shift: u32) -> u64 {
    let mut x = y;
    let mut s = shift;
    while s < 64 {
        x = y ^ (x >> shift);
        s += shift;
    }
    x
}

/// Inverse of [`mix64`].
pub fn unmix64(z: u64) -> u64 {
    let mut x = unshift_xor(z, 31);
    x = unshift_xor(x.wrapping_mul(MIX_C2_INV), 27);
    unshift_xor(x.wrapping_mul(MIX_C1_INV), 30)
}

/// Digest of a block header with the nonce left open.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeaderHash(Digest);

impl HeaderHash {
    pub fn of(block: &Block) -> Self {
        HeaderHash(Digest(sha256(&encode::block_header(block))))
    }

    pub fn digest_with_nonce(&self, nonce: u64) -> Digest {
        let top = self.0.top64() ^ mix64(nonce);
        self.0.with_top64(top)
    }

    /// The unique nonce whose digest has the given top 64 bits.
    pub fn nonce_for_top(&self, top: u64) -> u64 {
        unmix64(top ^ self.0.top64())
    }

    /// Low 192 bits of every digest of this header, independent of the nonce.
    pub fn low192(&self) -> &[u8] {
        self.0.low192()
    }
}

/// Deterministic digest of a block's canonical serialization.
pub fn digest_block(block: &Block) -> Digest {
    HeaderHash::of(block).digest_with_nonce(block.nonce)
}
