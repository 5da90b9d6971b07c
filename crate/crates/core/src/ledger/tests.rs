use super::*;
use crate::consensus::digest::digest_block;

const X: PartyId = PartyId(1);
const Y: PartyId = PartyId(2);

fn params() -> LedgerParams {
    LedgerParams::new(Amount::from_whole(50), FeeRate::from_per_coin(0.1).unwrap())
}

fn coins(c: u64) -> Amount {
    Amount::from_whole(c)
}

fn chain_with(genesis: &[(PartyId, u64)]) -> Chain {
    Chain::new(params(), genesis.iter().map(|(p, c)| Allocation::new(*p, coins(*c))).collect())
}

fn block(chain: &Chain, creator: PartyId, transactions: Vec<Transaction>) -> Block {
    Block {
        time: chain.tip_time(),
        prev_digest: chain.tip_digest(),
        transactions,
        creator,
        nonce: 0,
        reward: chain.params().reward,
    }
}

fn empty_blocks(chain: &mut Chain, n: u64) {
    for _ in 0..n {
        let b = block(chain, PartyId(99), vec![]);
        chain.apply_block(b).unwrap();
    }
}

fn pay(chain: &mut Chain, payer: PartyId, payee: PartyId, amount: Amount) -> Transaction {
    let tx = chain.make_transaction(payer, payee, amount, 0).unwrap();
    let b = block(chain, PartyId(99), vec![tx.clone()]);
    chain.apply_block(b).unwrap();
    tx
}

#[test]
fn balance_from_genesis() {
    let c = chain_with(&[(X, 100)]);
    assert_eq!(c.balance(X), coins(100));
    assert_eq!(c.balance(PartyId(42)), Amount::ZERO);
}

#[test]
fn payment_deducts_payment_and_fee() {
    let mut c = chain_with(&[(X, 100)]);
    let tx = c.make_transaction(X, Y, coins(10), 0).unwrap();
    assert_eq!(tx.fee, coins(1));
    assert_eq!(tx.change, coins(89));
    assert_eq!(tx.inputs.len(), 1);
    c.apply_block(block(&c, PartyId(99), vec![tx])).unwrap();
    assert_eq!(c.balance(X), coins(89));
    assert_eq!(c.balance(Y), coins(10));
    // replayed UTXO set agrees
    let utxo_x: Amount = c.utxo().values().filter(|o| o.owner == X).map(|o| o.amount).sum();
    assert_eq!(utxo_x, coins(89));
}

#[test]
fn spent_total_examples() {
    let mut c = chain_with(&[(X, 100)]);
    assert_eq!(c.spent_total(X), Amount::ZERO);
    pay(&mut c, X, X, coins(10));
    assert_eq!(c.spent_total(X), coins(10));
    pay(&mut c, X, Y, coins(5));
    assert_eq!(c.spent_total(X), coins(15));
    assert_eq!(c.spent_total(Y), Amount::ZERO);
}

#[test]
fn spent_recent_window() {
    // X spends 10 in block 3 of a 10-block chain
    let mut c = chain_with(&[(X, 100)]);
    empty_blocks(&mut c, 3);
    pay(&mut c, X, Y, coins(10));
    empty_blocks(&mut c, 6);
    assert_eq!(c.len(), 10);
    assert_eq!(c.spent_recent(X, 5), Amount::ZERO);
    assert_eq!(c.spent_recent(X, 7), coins(10));
    assert_eq!(c.spent_recent(X, 10), c.spent_total(X));
    assert_eq!(c.spent_recent(X, 1000), c.spent_total(X));

    // and in block 8
    let mut c = chain_with(&[(X, 100)]);
    empty_blocks(&mut c, 8);
    pay(&mut c, X, Y, coins(10));
    empty_blocks(&mut c, 1);
    assert_eq!(c.len(), 10);
    assert_eq!(c.spent_recent(X, 5), coins(10));
    assert_eq!(c.spent_recent(X, 2), coins(10));
    assert_eq!(c.spent_recent(X, 1), Amount::ZERO);
}

#[test]
fn coin_age_examples() {
    let mut c = chain_with(&[(X, 100)]);
    let genesis_ref = c.utxo().keys().next().copied().unwrap();
    empty_blocks(&mut c, 4);
    assert_eq!(c.coin_age(&genesis_ref).unwrap(), 3);

    // tip reward output has age 0
    let reward_ref = OutputRef { source: c.tip_digest(), index: 0 };
    assert_eq!(c.coin_age(&reward_ref).unwrap(), 0);

    // output created at height 5, consumed at height 7
    let mut c = chain_with(&[(X, 100)]);
    empty_blocks(&mut c, 5);
    let tx = pay(&mut c, X, Y, coins(10));
    assert_eq!(c.len(), 6);
    let created = tx.payment_ref();
    assert_eq!(c.output(&created).unwrap().created_at, 5);
    empty_blocks(&mut c, 1);
    let spend = c.make_transaction(Y, X, coins(1), 0).unwrap();
    assert_eq!(spend.inputs, vec![created]);
    c.apply_block(block(&c, X, vec![spend])).unwrap();
    assert_eq!(c.coin_age(&created).unwrap(), 2);

    let bogus = OutputRef { source: Digest::from_u64(7), index: 3 };
    assert_eq!(c.coin_age(&bogus), Err(LedgerError::UnknownOutput(bogus)));
}

use crate::consensus::digest::Digest;

/// Y receives 20 at height 5; spends it at height 7.
fn aged_spend_chain() -> Chain {
    let mut c = chain_with(&[(X, 100)]);
    empty_blocks(&mut c, 5);
    pay(&mut c, X, Y, coins(20));
    empty_blocks(&mut c, 1);
    pay(&mut c, Y, Y, coins(10));
    c
}

#[test]
fn spent_old_examples() {
    let c = aged_spend_chain();
    assert_eq!(c.spent_old(Y, 0), c.spent_total(Y));
    assert_eq!(c.spent_old(Y, 3), Amount::ZERO);
    assert_eq!(c.spent_old(Y, 2), coins(10));
    // X's genesis coin was 5 blocks old when spent
    assert_eq!(c.spent_old(X, 5), coins(20));
    assert_eq!(c.spent_old(X, 6), Amount::ZERO);
}

#[test]
fn spent_recent_old_examples() {
    let mut c = aged_spend_chain();
    empty_blocks(&mut c, 2);
    assert_eq!(c.len(), 10);
    assert_eq!(c.spent_recent_old(Y, 5, 0), c.spent_recent(Y, 5));
    assert_eq!(c.spent_recent_old(Y, 100, 2), c.spent_old(Y, 2));
    // Y's aged spend sits at height 7; a 1-block window misses it.
    assert_eq!(c.spent_recent_old(Y, 1, 2), Amount::ZERO);
    assert_eq!(c.spent_recent_old(Y, 3, 2), coins(10));
}

#[test]
fn cached_experience_matches_scan() {
    let p = params().with_experience(2);
    let mut cached = Chain::new(p, vec![Allocation::new(X, coins(100))]);
    let mut plain = chain_with(&[(X, 100)]);
    for c in [&mut cached, &mut plain] {
        empty_blocks(c, 5);
        pay(c, X, Y, coins(20));
        empty_blocks(c, 1);
        pay(c, Y, Y, coins(10));
        empty_blocks(c, 2);
    }
    for e in 0..8 {
        for f in 1..12 {
            assert_eq!(cached.spent_old(Y, e), plain.spent_old(Y, e));
            assert_eq!(cached.spent_recent_old(Y, f, e), plain.spent_recent_old(Y, f, e));
        }
    }
}

#[test]
fn mixed_age_inputs_attribute_oldest_first() {
    let portions = attribute_payment(coins(15), vec![(1, coins(10)), (9, coins(10))]);
    assert_eq!(portions, vec![(9, coins(10)), (1, coins(5))]);
    let portions = attribute_payment(coins(5), vec![(1, coins(10)), (9, coins(10))]);
    assert_eq!(portions, vec![(9, coins(5))]);
}

#[test]
fn make_transaction_errors_and_age_filter() {
    let mut c = chain_with(&[(X, 100)]);
    let err = c.make_transaction(X, Y, coins(100), 0).unwrap_err();
    assert_eq!(
        err,
        LedgerError::InsufficientFunds {
            party: X,
            required: coins(110),
            available: coins(100),
            shortfall: coins(10),
            min_age: 0
        }
    );
    assert_eq!(c.make_transaction(X, Y, Amount::ZERO, 0), Err(LedgerError::ZeroPayment));

    // genesis coin is age 0 when spent in block 0, so min_age 1 needs one block first
    assert!(matches!(c.make_transaction(X, Y, coins(1), 1), Err(LedgerError::InsufficientFunds { .. })));
    empty_blocks(&mut c, 1);
    assert!(c.make_transaction(X, Y, coins(1), 1).is_ok());
    assert_eq!(c.make_transaction(X, Y, coins(1), 0), c.make_transaction(X, Y, coins(1), 1));
}

#[test]
fn oldest_inputs_are_selected_first() {
    let mut c = Chain::new(
        params(),
        vec![Allocation::new(X, coins(5)), Allocation::new(X, coins(5))],
    );
    empty_blocks(&mut c, 1);
    // X's reward from a block at height 1 is younger than both genesis outputs
    let b = block(&c, X, vec![]);
    c.apply_block(b).unwrap();
    let tx = c.make_transaction(X, Y, coins(12), 0).unwrap();
    let created: Vec<u64> = tx.inputs.iter().map(|r| c.output(r).unwrap().created_at).collect();
    assert_eq!(created, vec![0, 0, 1]);
    assert_eq!(tx.change, coins(5 + 5 + 50 - 12) - tx.fee);
}

#[test]
fn empty_block_mints_reward() {
    let mut c = chain_with(&[(X, 100)]);
    let before = c.total_supply();
    c.apply_block(block(&c, Y, vec![])).unwrap();
    assert_eq!(c.total_supply(), before + coins(50));
    assert_eq!(c.balance(Y), coins(50));
    assert_eq!(c.total_supply(), c.expected_supply());
}

#[test]
fn reward_is_spendable_next_block() {
    let mut c = chain_with(&[]);
    c.apply_block(block(&c, X, vec![])).unwrap();
    let tx = c.make_transaction(X, Y, coins(10), 0).unwrap();
    c.apply_block(block(&c, X, vec![tx])).unwrap();
    assert_eq!(c.balance(X), coins(50 - 11 + 50));
}

#[test]
fn double_spend_is_rejected() {
    let c = chain_with(&[(X, 100)]);
    let a = c.make_transaction(X, Y, coins(10), 0).unwrap();
    let mut b = c.make_transaction(X, X, coins(20), 0).unwrap();
    assert_eq!(a.inputs, b.inputs);
    b.time += 1;
    let err = c.validate_block(&block(&c, X, vec![a.clone(), b])).unwrap_err();
    assert!(matches!(err, LedgerError::DoubleSpend(_)));

    let mut spent = c.clone();
    spent.apply_block(block(&c, X, vec![a.clone()])).unwrap();
    let again = block(&spent, X, vec![a]);
    assert!(matches!(spent.apply_block(again), Err(LedgerError::DoubleSpend(_))));
}

#[test]
fn structural_rejections() {
    let c = chain_with(&[(X, 100), (Y, 100)]);
    let good = c.make_transaction(X, Y, coins(10), 0).unwrap();

    let mut b = block(&c, X, vec![]);
    b.prev_digest = Digest::from_u64(1);
    assert!(matches!(c.validate_block(&b), Err(LedgerError::PrevDigestMismatch { .. })));

    let mut b = block(&c, X, vec![]);
    b.reward = coins(51);
    assert!(matches!(c.validate_block(&b), Err(LedgerError::RewardMismatch { .. })));

    let mut tx = good.clone();
    tx.signature = Y;
    assert_eq!(c.validate_block(&block(&c, X, vec![tx])), Err(LedgerError::BadSignature(X)));

    let mut tx = good.clone();
    tx.fee = coins(2);
    tx.change = tx.change - coins(1);
    assert!(matches!(c.validate_block(&block(&c, X, vec![tx])), Err(LedgerError::FeeMismatch { .. })));

    let mut tx = good.clone();
    tx.change = tx.change + Amount(1);
    assert!(matches!(c.validate_block(&block(&c, X, vec![tx])), Err(LedgerError::Unbalanced { .. })));

    let mut tx = good.clone();
    tx.payer = Y;
    tx.signature = Y;
    assert!(matches!(c.validate_block(&block(&c, X, vec![tx])), Err(LedgerError::WrongOwner { .. })));

    let mut tx = good.clone();
    tx.inputs = vec![OutputRef { source: Digest::from_u64(5), index: 0 }];
    assert!(matches!(c.validate_block(&block(&c, X, vec![tx])), Err(LedgerError::UnknownOutput(_))));

    let mut later = c.clone();
    let mut b = block(&c, X, vec![]);
    b.time = 10;
    later.apply_block(b).unwrap();
    let mut b = block(&later, X, vec![]);
    b.time = 9;
    assert!(matches!(later.validate_block(&b), Err(LedgerError::TimeRegression { .. })));
}

#[test]
fn rejected_block_leaves_chain_untouched() {
    let mut c = chain_with(&[(X, 100)]);
    let before = c.clone();
    let mut b = block(&c, X, vec![]);
    b.reward = Amount::ZERO;
    assert!(c.apply_block(b).is_err());
    assert_eq!(c, before);
}

#[test]
fn spending_a_same_block_output() {
    let mut c = chain_with(&[(X, 100)]);
    let first = c.make_transaction(X, Y, coins(10), 0).unwrap();
    let second = Transaction {
        time: 0,
        payer: Y,
        payee: X,
        payment: coins(5),
        fee: Amount(50_000_000),
        inputs: vec![first.payment_ref()],
        change: Amount(450_000_000),
        signature: Y,
    };
    c.apply_block(block(&c, X, vec![first.clone(), second])).unwrap();
    assert!(!c.is_live(&first.payment_ref()));
    assert_eq!(c.coin_age(&first.payment_ref()).unwrap(), 0);
    assert_eq!(c.total_supply(), c.expected_supply());
}

#[test]
fn replay_reproduces_state() {
    let mut c = chain_with(&[(X, 100), (Y, 40)]);
    pay(&mut c, X, Y, coins(10));
    pay(&mut c, Y, X, coins(30));
    empty_blocks(&mut c, 2);
    pay(&mut c, X, X, coins(7));
    let replayed = Chain::replay(params(), c.genesis().to_vec(), c.blocks()).unwrap();
    assert_eq!(replayed, c);
    assert_eq!(replayed.utxo(), c.utxo());
}

#[test]
fn digests_link_blocks() {
    let mut c = chain_with(&[(X, 100)]);
    empty_blocks(&mut c, 3);
    assert_eq!(c.blocks()[0].prev_digest, c.genesis_digest());
    for h in 1..3 {
        assert_eq!(c.blocks()[h].prev_digest, digest_block(&c.blocks()[h - 1]));
    }
    assert_eq!(c.tip_digest(), digest_block(&c.blocks()[2]));
}
