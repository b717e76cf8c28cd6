// SPDX-License-Identifier: Apache-2.0

//! Exact rational numbers with a stable text encoding.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An exact rational value.
///
/// Serializes as `"numer/denom"` in lowest terms (or just `"numer"` when the
/// denominator is one), so metric values survive a JSON round trip without
/// any floating-point loss.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Rational(BigRational);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(String);

impl Rational {
    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn from_integer(n: i128) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// `numer / denom`. Panics if `denom` is zero.
    pub fn new(numer: i128, denom: i128) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_bytes_ratio(numer: u64, denom: u64) -> Self {
        Self::new(i128::from(numer), i128::from(denom))
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// Nearest `f64`. Only for display and reporting.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Numerator and denominator in lowest terms when both fit in `u128`.
    pub fn to_u128_parts(&self) -> Option<(u128, u128)> {
        Some((self.0.numer().to_u128()?, self.0.denom().to_u128()?))
    }

    /// Arithmetic mean of a non-empty slice.
    pub fn mean(values: &[Rational]) -> Option<Rational> {
        if values.is_empty() {
            return None;
        }
        let sum = values
            .iter()
            .fold(BigRational::zero(), |acc, v| acc + &v.0);
        Some(Rational(sum / BigInt::from(values.len())))
    }
}

impl From<BigRational> for Rational {
    fn from(value: BigRational) -> Self {
        Rational(value)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for Rational {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRationalError(s.to_string());
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n, d),
            None => (s, "1"),
        };
        let numer: BigInt = n.trim().parse().map_err(|_| err())?;
        let denom: BigInt = d.trim().parse().map_err(|_| err())?;
        if denom.is_zero() {
            return Err(err());
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
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
    fn display_is_lowest_terms() {
        assert_eq!(Rational::new(4, 2).to_string(), "2");
        assert_eq!(Rational::new(6, 4).to_string(), "3/2");
        assert_eq!(Rational::new(-1, 3).to_string(), "-1/3");
    }

    #[test]
    fn rejects_zero_denominator() {
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
    }

    #[test]
    fn mean_of_symmetric_pair() {
        let m = Rational::mean(&[Rational::from_integer(1), Rational::from_integer(3)]).unwrap();
        assert_eq!(m, Rational::from_integer(2));
        assert!(Rational::mean(&[]).is_none());
    }

    proptest! {
        #[test]
        fn json_round_trip(n in any::<i64>(), d in 1i64..) {
            let r = Rational::new(n.into(), d.into());
            let json = serde_json::to_string(&r).unwrap();
            let back: Rational = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(r, back);
        }
    }
}
