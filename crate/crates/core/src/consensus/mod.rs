//! Block validity rules and fork choice.
//!
//! Every rule accepts block `B` built on chain `C` by creator `A` iff
//!
//! ```text
//! digest(B) < floor((1 + s) * 2^(256 - D))        (capped at 2^256 - 1)
//! ```
//!
//! where `s` is a rule-specific statistic of `A` on `C` measured in coins:
//! zero for proof of work, the balance for proof of balance, and total,
//! windowed, aged or windowed-aged spending for the spending rules. When
//! `1 + s = 2^k` this is exactly `nlz(digest) >= D - k`; otherwise it is the
//! fractional-difficulty generalisation with success probability
//! `(1 + s) * 2^-D` per uniform digest.

pub mod digest;
mod rule;

pub use digest::{digest_block, nlz, Digest, HeaderHash};
pub use rule::{
    block_valid, fork_choice, grind_nonce, realize_nonce, spending_statistic, success_probability,
    target, target_for_width, ConsensusError, ConsensusRule, Rejection, RuleKind,
};
