//! Scalar types the cleartext recursions run over.

use std::fmt::Debug;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// A field-like number type: f32, f64, or an exact rational.
///
/// Floats convert to rationals through their shortest round-trip decimal
/// form, so `1.005_f64` becomes exactly 1005/1000 rather than the nearest
/// binary fraction.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn from_rational(r: &BigRational) -> Self;

    /// `None` for NaN and infinities.
    fn to_rational(&self) -> Option<BigRational>;

    fn from_int(v: i64) -> Self {
        Self::from_i64(v).unwrap()
    }

    fn from_big(v: &BigInt) -> Self {
        Self::from_rational(&BigRational::from_integer(v.clone()))
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Parses a decimal literal such as `-1.005e-3` into an exact rational.
pub fn decimal_to_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], i64::from_str(&s[i + 1..]).ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(i) => (&mantissa[..i], &mantissa[i + 1..]),
        None => (mantissa, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let mut value = BigInt::from_str(&digits).ok()?;
    if neg {
        value = -value;
    }
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let r = if scale >= 0 {
        BigRational::from_integer(value * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(value, num_traits::pow(ten, (-scale) as usize))
    };
    Some(r)
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn from_rational(r: &BigRational) -> Self {
                r.to_f64().unwrap_or(f64::NAN) as $t
            }

            fn to_rational(&self) -> Option<BigRational> {
                if !self.is_finite() {
                    return None;
                }
                if self.is_zero() {
                    return Some(BigRational::zero());
                }
                decimal_to_rational(&format!("{:e}", self))
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }
}

/// 10^e as a big integer.
pub fn pow10(e: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), e as usize)
}

/// Rounds to the nearest integer, ties away from zero.
pub fn round_half_away(r: &BigRational) -> BigInt {
    let two = BigInt::from(2);
    let num = r.numer() * &two;
    let den = r.denom() * &two;
    // |r| + 1/2 = (2|n| + d) / 2d, then truncate
    let mag = (num.abs() + r.denom()) / den;
    if r.is_negative() {
        -mag
    } else {
        mag
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(decimal_to_rational("-1.005e0").unwrap(), q(-201, 200));
        assert_eq!(decimal_to_rational("1e-7").unwrap(), q(1, 10_000_000));
        assert_eq!(decimal_to_rational("2.5e2").unwrap(), q(250, 1));
        assert_eq!(decimal_to_rational("+.5").unwrap(), q(1, 2));
        assert!(decimal_to_rational("abc").is_none());
        assert!(decimal_to_rational("1.2.3").is_none());
    }

    #[test]
    fn floats_convert_through_shortest_decimal() {
        assert_eq!((-1.005f64).to_rational().unwrap(), q(-201, 200));
        assert_eq!(0.1f32.to_rational().unwrap(), q(1, 10));
        assert_eq!(0.0f64.to_rational().unwrap(), q(0, 1));
        assert!(f64::NAN.to_rational().is_none());
        assert!(f64::INFINITY.to_rational().is_none());
        assert_eq!(f64::from_rational(&q(3, 4)), 0.75);
    }

    #[test]
    fn rounding_ties_away_from_zero() {
        assert_eq!(round_half_away(&q(5, 2)), BigInt::from(3));
        assert_eq!(round_half_away(&q(-5, 2)), BigInt::from(-3));
        assert_eq!(round_half_away(&q(-201, 2)), BigInt::from(-101));
        assert_eq!(round_half_away(&q(126, 10)), BigInt::from(13));
        assert_eq!(round_half_away(&q(124, 10)), BigInt::from(12));
        assert_eq!(round_half_away(&q(-124, 10)), BigInt::from(-12));
        assert_eq!(round_half_away(&q(0, 1)), BigInt::from(0));
    }
}
