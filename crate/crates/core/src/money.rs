//! Fixed-point money and odds.
//!
//! Balances are held in milli-pounds and decimal odds in milli-units, so every
//! stake, payout and balance is an exact integer and replays are bit-exact.

use std::fmt;
use std::ops::{Add, AddAssign, Sub, SubAssign};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Milli-units per whole unit.
pub const SCALE: i64 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmountError {
    #[error("not a decimal number: {0:?}")]
    Syntax(String),
    #[error("more than three fractional digits: {0:?}")]
    Precision(String),
    #[error("value out of range: {0:?}")]
    Range(String),
}

/// Parses a plain decimal string into milli-units.
///
/// With `round` set, extra fractional digits are rounded half-to-even;
/// otherwise they are rejected.
pub fn parse_milli(text: &str, round: bool) -> Result<i64, AmountError> {
    let s = text.trim();
    let (neg, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if (int_part.is_empty() && frac_part.is_empty())
        || !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return Err(AmountError::Syntax(text.to_string()));
    }
    let int: i64 = if int_part.is_empty() {
        0
    } else {
        int_part
            .parse()
            .map_err(|_| AmountError::Range(text.to_string()))?
    };
    let digits = frac_part.as_bytes();
    let mut frac: i64 = 0;
    for i in 0..3 {
        frac = frac * 10 + digits.get(i).map_or(0, |d| i64::from(d - b'0'));
    }
    if digits.len() > 3 {
        let rest = &digits[3..];
        if rest.iter().any(|&d| d != b'0') {
            if !round {
                return Err(AmountError::Precision(text.to_string()));
            }
            let first = rest[0] - b'0';
            let tail_nonzero = rest[1..].iter().any(|&d| d != b'0');
            let up = first > 5 || (first == 5 && (tail_nonzero || frac % 2 == 1));
            if up {
                frac += 1;
            }
        }
    }
    let magnitude = int
        .checked_mul(SCALE)
        .and_then(|v| v.checked_add(frac))
        .ok_or_else(|| AmountError::Range(text.to_string()))?;
    Ok(if neg { -magnitude } else { magnitude })
}

/// Integer division rounding half-to-even. `den` must be positive.
pub(crate) fn div_round_half_even(num: i128, den: i128) -> i128 {
    let q = num.div_euclid(den);
    let r = num.rem_euclid(den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => {
            if q % 2 == 0 {
                q
            } else {
                q + 1
            }
        }
    }
}

fn write_milli(f: &mut fmt::Formatter<'_>, milli: i64) -> fmt::Result {
    let sign = if milli < 0 { "-" } else { "" };
    let abs = milli.unsigned_abs();
    write!(f, "{sign}{}.{:03}", abs / 1000, abs % 1000)
}

/// An amount of money in milli-pounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(i64);

impl Money {
    pub const ZERO: Money = Money(0);
    /// Smallest accepted stake, one milli-pound.
    pub const MIN_STAKE: Money = Money(1);

    pub const fn from_milli(milli: i64) -> Self {
        Money(milli)
    }

    pub const fn from_pounds(pounds: i64) -> Self {
        Money(pounds * SCALE)
    }

    pub const fn milli(self) -> i64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// `self × fraction`, rounded down to the milli-pound.
    pub fn scale_floor(self, fraction: f64) -> Money {
        if !(fraction > 0.0) {
            return Money::ZERO;
        }
        Money(((self.0 as f64) * fraction).floor() as i64)
    }

    /// `self × num / den` in exact integer arithmetic, rounded down.
    pub fn ratio_floor(self, num: i64, den: i64) -> Money {
        Money((i128::from(self.0) * i128::from(num)).div_euclid(i128::from(den)) as i64)
    }

    /// Gross return of a winning stake: `stake × odds`, half-to-even to the milli-pound.
    pub fn times_odds(self, odds: Odds) -> Money {
        let num = i128::from(self.0) * i128::from(odds.milli());
        Money(div_round_half_even(num, i128::from(SCALE)) as i64)
    }

    /// Two-decimal display in the style used by the textual tool renderings.
    pub fn display_2dp(self) -> String {
        let cents = div_round_half_even(i128::from(self.0), 10) as i64;
        let sign = if cents < 0 { "-" } else { "" };
        let abs = cents.unsigned_abs();
        format!("{sign}{}.{:02}", abs / 100, abs % 100)
    }

    /// Shortest decimal display keeping at least one fractional digit ("17.0", "0.001").
    pub fn display_short(self) -> String {
        short_decimal(self.0)
    }
}

fn short_decimal(milli: i64) -> String {
    let sign = if milli < 0 { "-" } else { "" };
    let abs = milli.unsigned_abs();
    let mut frac = format!("{:03}", abs % 1000);
    while frac.len() > 1 && frac.ends_with('0') {
        frac.pop();
    }
    format!("{sign}{}.{frac}", abs / 1000)
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_milli(f, self.0)
    }
}

impl FromStr for Money {
    type Err = AmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_milli(s, false).map(Money)
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Sub for Money {
    type Output = Money;
    fn sub(self, rhs: Money) -> Money {
        Money(self.0 - rhs.0)
    }
}

impl SubAssign for Money {
    fn sub_assign(&mut self, rhs: Money) {
        self.0 -= rhs.0;
    }
}

impl std::iter::Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        Money(iter.map(|m| m.0).sum())
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Decimal odds in milli-units (8.0 is 8000). Always greater than 1.0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Odds(u32);

impl Odds {
    pub fn from_milli(milli: u32) -> Option<Self> {
        (milli > SCALE as u32).then_some(Odds(milli))
    }

    pub const fn milli(self) -> u32 {
        self.0
    }

    pub fn decimal(self) -> f64 {
        f64::from(self.0) / SCALE as f64
    }

    /// Net odds, the profit per unit staked on a win.
    pub fn net(self) -> f64 {
        self.decimal() - 1.0
    }

    /// Parses CSV-style odds, rounding beyond three decimals.
    pub fn parse_lenient(s: &str) -> Result<Self, AmountError> {
        let milli = parse_milli(s, true)?;
        u32::try_from(milli)
            .ok()
            .and_then(Odds::from_milli)
            .ok_or_else(|| AmountError::Range(s.to_string()))
    }

    pub fn display_short(self) -> String {
        short_decimal(i64::from(self.0))
    }
}

impl fmt::Display for Odds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_milli(f, i64::from(self.0))
    }
}

impl FromStr for Odds {
    type Err = AmountError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let milli = parse_milli(s, false)?;
        u32::try_from(milli)
            .ok()
            .and_then(Odds::from_milli)
            .ok_or_else(|| AmountError::Range(s.to_string()))
    }
}

impl Serialize for Odds {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Odds {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_exact_amounts() {
        assert_eq!("17".parse::<Money>().unwrap(), Money::from_milli(17_000));
        assert_eq!("17.0".parse::<Money>().unwrap(), Money::from_milli(17_000));
        assert_eq!("0.001".parse::<Money>().unwrap(), Money::MIN_STAKE);
        assert_eq!(".5".parse::<Money>().unwrap(), Money::from_milli(500));
        assert_eq!("-28".parse::<Money>().unwrap(), Money::from_milli(-28_000));
        assert!(matches!(
            "0.0005".parse::<Money>(),
            Err(AmountError::Precision(_))
        ));
        assert!("1e3".parse::<Money>().is_err());
        assert!("".parse::<Money>().is_err());
        assert!(".".parse::<Money>().is_err());
    }

    #[test]
    fn lenient_odds_round_half_even() {
        assert_eq!(Odds::parse_lenient("1.3335").unwrap().milli(), 1334);
        assert_eq!(Odds::parse_lenient("1.3325").unwrap().milli(), 1332);
        assert_eq!(Odds::parse_lenient("1.33251").unwrap().milli(), 1333);
        assert!(Odds::parse_lenient("1.0").is_err());
        assert!(Odds::parse_lenient("0.9").is_err());
    }

    #[test]
    fn payouts_match_worked_matchday() {
        let stake = Money::from_pounds(17);
        assert_eq!(stake.times_odds("8.0".parse().unwrap()), Money::from_pounds(136));
        assert_eq!(
            Money::from_pounds(6).times_odds("5.5".parse().unwrap()),
            Money::from_pounds(33)
        );
        assert_eq!(
            Money::from_pounds(5).times_odds("2.2".parse().unwrap()),
            Money::from_pounds(11)
        );
        // 0.001 × 2.5 = 0.0025 -> 0.002 (even), 0.003 × 2.5 = 0.0075 -> 0.008
        let odds: Odds = "2.5".parse().unwrap();
        assert_eq!(Money::from_milli(1).times_odds(odds).milli(), 2);
        assert_eq!(Money::from_milli(3).times_odds(odds).milli(), 8);
    }

    #[test]
    fn displays() {
        assert_eq!(Money::from_milli(17_000).to_string(), "17.000");
        assert_eq!(Money::from_milli(-28_000).display_2dp(), "-28.00");
        assert_eq!(Money::from_milli(17_000).display_short(), "17.0");
        assert_eq!(Money::from_milli(1).display_short(), "0.001");
        assert_eq!(Odds::from_milli(1330).unwrap().display_short(), "1.33");
        assert_eq!(Odds::from_milli(8000).unwrap().to_string(), "8.000");
    }

    proptest! {
        #[test]
        fn display_parse_round_trip(milli in -10_000_000_000i64..10_000_000_000) {
            let m = Money::from_milli(milli);
            prop_assert_eq!(m.to_string().parse::<Money>().unwrap(), m);
            prop_assert_eq!(m.display_short().parse::<Money>().unwrap(), m);
        }

        #[test]
        fn payout_never_below_stake(stake in 1i64..1_000_000_000, odds in 1001u32..1_000_000) {
            let s = Money::from_milli(stake);
            prop_assert!(s.times_odds(Odds::from_milli(odds).unwrap()) >= s);
        }
    }
}
