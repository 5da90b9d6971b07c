use super::*;
use crate::consensus::digest::{digest_block, nlz};
use crate::ledger::{Allocation, FeeRate, LedgerParams, Transaction};
use num_bigint::BigUint;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coins(c: u64) -> Amount {
    Amount::from_whole(c)
}

fn big_pow2(e: u32) -> BigUint {
    BigUint::one() << e
}

#[test]
fn target_examples() {
    assert_eq!(target(8, Amount::ZERO).to_biguint(), big_pow2(248));
    assert_eq!(target(16, coins(15)).to_biguint(), big_pow2(244));
    assert_eq!(target(8, coins(255)), Digest::MAX);
    assert_eq!(target(8, coins(10_000)), Digest::MAX);
    assert_eq!(target(1, Amount::ZERO).to_biguint(), big_pow2(255));
    assert_eq!(target(256, Amount::ZERO).to_biguint(), BigUint::one());
    // half a coin adds half a unit of 2^(256-D)
    assert_eq!(target(8, Amount(COIN / 2)).to_biguint(), big_pow2(248) + big_pow2(247));
}

#[test]
fn target_boundary_digests() {
    let t = target(16, coins(15));
    let at = Digest::pow2(244);
    let below = Digest::from_biguint(&(big_pow2(244) - BigUint::one())).unwrap();
    assert!(!(at < t));
    assert!(below < t);
    assert_eq!(t.top64(), 1 << 52);
}

#[test]
fn probability_examples() {
    assert_eq!(success_probability(8, Amount::ZERO), 1.0 / 256.0);
    assert_eq!(success_probability(16, coins(15)), 1.0 / 4096.0);
    assert_eq!(success_probability(8, coins(255)), 1.0);
    assert_eq!(success_probability(8, coins(1000)), 1.0);
}

#[test]
fn exhaustive_small_width_threshold() {
    // In a 16-bit digest space, the number of valid digests is exactly
    // min(2^16, (1 + s) 2^(16 - D)) for whole-coin statistics.
    for d in 1..=16u32 {
        for s in [0u64, 1, 2, 3, 7, 100, 65_535] {
            let t = target_for_width(16, d, coins(s));
            let t = t.to_u64().unwrap();
            let valid = (0u64..1 << 16).filter(|&x| x < t).count() as u64;
            assert_eq!(valid, ((1 + s) << (16 - d)).min((1 << 16) - 1), "D={d} s={s}");
        }
    }
}

#[test]
fn zero_statistic_is_leading_zero_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let mut bytes: [u8; 32] = rng.random();
        let zeros = rng.random_range(0..24usize);
        for b in bytes.iter_mut().take(zeros / 8) {
            *b = 0;
        }
        if zeros % 8 != 0 {
            bytes[zeros / 8] >>= zeros % 8;
        }
        let d = Digest(bytes);
        for diff in 1..=24 {
            assert_eq!(d < target(diff, Amount::ZERO), nlz(&d) >= diff);
        }
    }
}

#[test]
fn rule_validation() {
    assert!(ConsensusRule::new(RuleKind::Pow, 0, 1, 0).is_err());
    assert!(ConsensusRule::new(RuleKind::Pow, 257, 1, 0).is_err());
    assert_eq!(ConsensusRule::new(RuleKind::Prs, 8, 0, 0), Err(ConsensusError::Freshness));
    assert!(ConsensusRule::new(RuleKind::Psp, 8, 0, 0).is_ok());
    assert_eq!("rso".parse::<RuleKind>().unwrap(), RuleKind::Rso);
    assert!("pos".parse::<RuleKind>().is_err());
    assert_eq!(ConsensusRule::pso(8, 3).min_age(), 3);
    assert_eq!(ConsensusRule::psp(8).min_age(), 0);
}

fn params() -> LedgerParams {
    LedgerParams::new(coins(50), FeeRate::from_per_coin(0.1).unwrap())
}

fn template(chain: &Chain, creator: PartyId, txs: Vec<Transaction>) -> Block {
    Block {
        time: chain.tip_time(),
        prev_digest: chain.tip_digest(),
        transactions: txs,
        creator,
        nonce: 0,
        reward: chain.params().reward,
    }
}

#[test]
fn statistics_per_rule() {
    let x = PartyId(1);
    let mut c = Chain::new(params(), vec![Allocation::new(x, coins(100))]);
    for _ in 0..3 {
        let tx = c.make_transaction(x, x, coins(10), 0).unwrap();
        let b = template(&c, PartyId(2), vec![tx]);
        c.apply_block(b).unwrap();
    }
    assert_eq!(spending_statistic(&ConsensusRule::pow(8), x, &c), Amount::ZERO);
    assert_eq!(spending_statistic(&ConsensusRule::pob(8), x, &c), coins(97));
    assert_eq!(spending_statistic(&ConsensusRule::psp(8), x, &c), coins(30));
    assert_eq!(spending_statistic(&ConsensusRule::prs(8, 2), x, &c), coins(20));
    assert_eq!(spending_statistic(&ConsensusRule::pso(8, 1), x, &c), coins(20));
    assert_eq!(spending_statistic(&ConsensusRule::rso(8, 1, 1), x, &c), coins(10));
}

#[test]
fn block_valid_uses_parent_statistic() {
    let x = PartyId(1);
    let c = Chain::new(params(), vec![Allocation::new(x, coins(1000))]);
    let rule = ConsensusRule::psp(8);
    // The block's own spending must not lower its target.
    let tx = c.make_transaction(x, x, coins(500), 0).unwrap();
    let mut b = template(&c, x, vec![tx]);
    let pow_target = target(8, Amount::ZERO);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    realize_nonce(&mut b, &pow_target, &mut rng).unwrap();
    assert!(block_valid(&b, &c, &rule).is_ok());

    // Grind for a nonce that beats the spent-coin target but misses the PoW one.
    let boosted = target(8, coins(500));
    let mut found = false;
    for start in 0..200u64 {
        let mut trial = b.clone();
        if grind_nonce(&mut trial, &boosted, start * 1000, 1000).is_some() {
            let d = digest_block(&trial);
            if !(d < pow_target) {
                assert!(matches!(block_valid(&trial, &c, &rule), Err(Rejection::Threshold { .. })));
                found = true;
                break;
            }
        }
    }
    assert!(found);
}

#[test]
fn block_valid_reports_structural_errors() {
    let c = Chain::new(params(), vec![]);
    let mut b = template(&c, PartyId(1), vec![]);
    b.reward = coins(1);
    assert!(matches!(block_valid(&b, &c, &ConsensusRule::pow(1)), Err(Rejection::Structural(_))));
}

#[test]
fn realize_nonce_meets_target() {
    let c = Chain::new(params(), vec![]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for d in [1u32, 8, 30, 64] {
        let t = target(d, coins(3));
        let mut b = template(&c, PartyId(1), vec![]);
        b.time = d as u64;
        let digest = realize_nonce(&mut b, &t, &mut rng).unwrap();
        assert_eq!(digest, digest_block(&b));
        assert!(digest < t);
    }
    let mut b = template(&c, PartyId(1), vec![]);
    assert_eq!(realize_nonce(&mut b, &target(100, Amount::ZERO), &mut rng), Err(ConsensusError::TargetTooSmall));
}

#[test]
fn grind_nonce_counts_attempts() {
    let c = Chain::new(params(), vec![]);
    let mut b = template(&c, PartyId(1), vec![]);
    let t = target(6, Amount::ZERO);
    let attempts = grind_nonce(&mut b, &t, 0, 100_000).unwrap();
    assert_eq!(b.nonce, attempts - 1);
    assert!(digest_block(&b) < t);
    for n in 0..b.nonce {
        let mut other = b.clone();
        other.nonce = n;
        assert!(!(digest_block(&other) < t));
    }
    assert_eq!(grind_nonce(&mut b, &target(64, Amount::ZERO), 0, 10), None);
}

fn chain_of(len: usize, creator: PartyId) -> Chain {
    let mut c = Chain::new(params(), vec![]);
    for _ in 0..len {
        let b = template(&c, creator, vec![]);
        c.apply_block(b).unwrap();
    }
    c
}

#[test]
fn fork_choice_examples() {
    let a = chain_of(10, PartyId(1));
    let b = chain_of(12, PartyId(2));
    assert_eq!(fork_choice([&a, &b]).unwrap().len(), 12);
    assert_eq!(fork_choice([&b, &a]).unwrap().len(), 12);

    let c = chain_of(12, PartyId(3));
    assert!(std::ptr::eq(fork_choice([&b, &c]).unwrap(), &b));
    assert!(std::ptr::eq(fork_choice([&c, &b]).unwrap(), &c));
    assert!(fork_choice(std::iter::empty::<&Chain>()).is_none());
}

proptest! {
    #[test]
    fn target_monotone_in_statistic(d in 1u32..=256, s in 0u64..1_000_000_000_000, extra in 0u64..1_000_000_000) {
        let lo = target(d, Amount(s));
        let hi = target(d, Amount(s + extra));
        prop_assert!(lo <= hi);
        let p_lo = success_probability(d, Amount(s));
        let p_hi = success_probability(d, Amount(s + extra));
        prop_assert!(p_lo <= p_hi);
    }

    #[test]
    fn probability_formula(d in 1u32..=60, s in 0u64..100_000) {
        let expect = ((1.0 + s as f64) / 2f64.powi(d as i32)).min(1.0);
        let p = success_probability(d, coins(s));
        prop_assert!((p - expect).abs() <= expect * 1e-12);
    }

    #[test]
    fn pow_target_matches_nlz(bytes in any::<[u8; 32]>(), d in 1u32..=256) {
        let digest = Digest(bytes);
        prop_assert_eq!(digest < target(d, Amount::ZERO), nlz(&digest) >= d);
    }
}
