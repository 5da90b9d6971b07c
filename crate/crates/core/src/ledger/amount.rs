use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// Base units per whole coin (8 fractional digits).
pub const COIN: u64 = 100_000_000;

/// A non-negative quantity of coins, stored as integer base units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Amount(pub u64);

impl Amount {
    pub const ZERO: Amount = Amount(0);

    pub const fn from_base(units: u64) -> Self {
        Amount(units)
    }

    /// Whole coins, panicking on overflow.
    pub const fn from_whole(coins: u64) -> Self {
        match coins.checked_mul(COIN) {
            Some(v) => Amount(v),
            None => panic!("coin amount overflows u64 base units"),
        }
    }

    /// Converts a decimal coin value, rounding to the nearest base unit.
    /// Returns `None` for negative, non-finite or out-of-range inputs.
    pub fn from_coins(coins: f64) -> Option<Self> {
        if !coins.is_finite() || coins < 0.0 {
            return None;
        }
        let units = (coins * COIN as f64).round();
        if units > u64::MAX as f64 {
            return None;
        }
        Some(Amount(units as u64))
    }

    pub const fn base(self) -> u64 {
        self.0
    }

    pub fn to_coins(self) -> f64 {
        self.0 as f64 / COIN as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_add(rhs.0).map(Amount)
    }

    pub fn checked_sub(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_sub(rhs.0).map(Amount)
    }

    pub fn saturating_sub(self, rhs: Amount) -> Amount {
        Amount(self.0.saturating_sub(rhs.0))
    }

    pub fn checked_mul(self, factor: u64) -> Option<Amount> {
        self.0.checked_mul(factor).map(Amount)
    }
}

impl Add for Amount {
    type Output = Amount;

    fn add(self, rhs: Amount) -> Amount {
        self.checked_add(rhs).expect("coin amount overflow")
    }
}

impl AddAssign for Amount {
    fn add_assign(&mut self, rhs: Amount) {
        *self = *self + rhs;
    }
}

impl Sub for Amount {
    type Output = Amount;

    fn sub(self, rhs: Amount) -> Amount {
        self.checked_sub(rhs).expect("coin amount underflow")
    }
}

impl Sum for Amount {
    fn sum<I: Iterator<Item = Amount>>(iter: I) -> Amount {
        iter.fold(Amount::ZERO, Add::add)
    }
}

impl<'a> Sum<&'a Amount> for Amount {
    fn sum<I: Iterator<Item = &'a Amount>>(iter: I) -> Amount {
        iter.copied().sum()
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:08}", self.0 / COIN, self.0 % COIN)
    }
}

/// Transaction fee charged per coin of payment, in base units per `COIN`.
///
/// A rate of `COIN / 10` is a fee of 0.1 coin per coin paid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeeRate(pub u64);

impl FeeRate {
    pub fn from_per_coin(fpc: f64) -> Option<Self> {
        Amount::from_coins(fpc).map(|a| FeeRate(a.0))
    }

    pub fn per_coin(self) -> f64 {
        self.0 as f64 / COIN as f64
    }

    /// `round_half_up(rate * payment)` in exact integer arithmetic.
    pub fn fee_for(self, payment: Amount) -> Amount {
        let scaled = payment.0 as u128 * self.0 as u128 + (COIN as u128 / 2);
        let fee = scaled / COIN as u128;
        Amount(u64::try_from(fee).expect("fee overflows u64 base units"))
    }

    /// Largest spend per block whose fee does not exceed `reward`: `floor(reward / rate)`.
    /// `None` for a zero rate (spending is free, so there is no bound).
    pub fn sustainable_spend(self, reward: Amount) -> Option<Amount> {
        if self.0 == 0 {
            return None;
        }
        let s = reward.0 as u128 * COIN as u128 / self.0 as u128;
        u64::try_from(s).ok().map(Amount)
    }
}
