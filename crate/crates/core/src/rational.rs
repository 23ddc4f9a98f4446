//! Exact rationals and their text form.
//!
//! Rationals are written as `"p/q"` strings. On input, plain integers,
//! finite decimals (`"0.25"`) and JSON numbers (read as the exact binary
//! value of the double) are accepted as well.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// `p / q` in lowest terms. Panics if `q == 0`.
pub fn ratio(p: i64, q: i64) -> Rational {
    assert!(q != 0, "zero denominator");
    let g = p.gcd(&q);
    let (mut p, mut q) = (p / g, q / g);
    if q < 0 {
        p = -p;
        q = -q;
    }
    Rational::new_raw(BigInt::from(p), BigInt::from(q))
}

/// `k / 2^bits` in lowest terms without a gcd.
pub fn dyadic(k: i64, bits: u32) -> Rational {
    if k == 0 {
        return Rational::zero();
    }
    let tz = k.trailing_zeros().min(bits);
    Rational::new_raw(
        BigInt::from(k >> tz),
        BigInt::from(1u64) << (bits - tz) as usize,
    )
}

/// Exact value of a finite double.
pub fn from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::Parse(format!("non-finite number {x}")))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let whole: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = Rational::new(whole * &scale + frac, scale);
        return Ok(if negative { -mag } else { mag });
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(p))
}

/// Always `p/q`, also for integers.
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// A point of the extended real line.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Extended {
    NegInf,
    Finite(Rational),
    PosInf,
}

impl Extended {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Extended::Finite(r) => Some(r),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::NegInf => f64::NEG_INFINITY,
            Extended::Finite(r) => to_f64(r),
            Extended::PosInf => f64::INFINITY,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::NegInf => f.write_str("-inf"),
            Extended::Finite(r) => f.write_str(&format(r)),
            Extended::PosInf => f.write_str("+inf"),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Repr {
    Text(String),
    Number(f64),
}

impl Repr {
    fn into_rational(self) -> Result<Rational> {
        match self {
            Repr::Text(s) => parse(&s),
            Repr::Number(x) => from_f64(x),
        }
    }
}

/// Serde adapter for a single [`Rational`] field.
pub mod serde_one {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        Repr::deserialize(d)?
            .into_rational()
            .map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for `Vec<Rational>`.
pub mod serde_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&format(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| r.into_rational().map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_input_forms() {
        assert_eq!(parse("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse("-4").unwrap(), int(-4));
        assert_eq!(parse("0.25").unwrap(), ratio(1, 4));
        assert_eq!(parse("-1.5").unwrap(), ratio(-3, 2));
        assert_eq!(parse(".5").unwrap(), ratio(1, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("1.").is_err());
    }

    #[test]
    fn formats_as_p_over_q() {
        assert_eq!(format(&int(3)), "3/1");
        assert_eq!(format(&ratio(-2, 4)), "-1/2");
    }

    #[test]
    fn dyadic_is_reduced() {
        assert_eq!(dyadic(6, 3), ratio(3, 4));
        assert_eq!(dyadic(-8, 3), int(-1));
        assert_eq!(dyadic(0, 32), int(0));
        let d = dyadic(12, 4);
        assert_eq!(d.numer(), &BigInt::from(3));
        assert_eq!(d.denom(), &BigInt::from(4));
    }

    #[test]
    fn f64_round_trip_is_exact() {
        let x = 0.1f64;
        let r = from_f64(x).unwrap();
        assert_eq!(to_f64(&r), x);
        assert!(from_f64(f64::NAN).is_err());
    }

    #[test]
    fn extended_order() {
        assert!(Extended::NegInf < Extended::Finite(int(-100)));
        assert!(Extended::Finite(int(100)) < Extended::PosInf);
    }
}
