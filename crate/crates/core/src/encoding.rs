//! Fixed-point integer encoding and the signed binary message polynomial.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{ElsError, Result};
use crate::linalg::Matrix;
use crate::scalar::{pow10, round_half_away, Scalar};

/// Number of decimal places kept when encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingConfig {
    pub phi: u32,
}

impl EncodingConfig {
    pub fn new(phi: u32) -> EncodingConfig {
        EncodingConfig { phi }
    }

    /// 10^phi
    pub fn factor(&self) -> BigInt {
        pow10(self.phi)
    }
}

pub type EncodedInteger = BigInt;

/// round(10^phi z), ties away from zero.
pub fn encode_scalar<T: Scalar>(z: &T, cfg: EncodingConfig) -> Result<EncodedInteger> {
    let r = z
        .to_rational()
        .ok_or_else(|| ElsError::Encoding(format!("cannot encode non-finite value {z:?}")))?;
    Ok(round_half_away(&(r * BigRational::from_integer(cfg.factor()))))
}

pub fn decode_scalar<T: Scalar>(v: &EncodedInteger, total_scale: &BigInt) -> Result<T> {
    decode_rational(v, total_scale).map(|r| T::from_rational(&r))
}

pub fn decode_rational(v: &EncodedInteger, total_scale: &BigInt) -> Result<BigRational> {
    if !total_scale.is_positive() {
        return Err(ElsError::Encoding(format!("scale {total_scale} is not positive")));
    }
    Ok(BigRational::new(v.clone(), total_scale.clone()))
}

pub fn encode_matrix<T: Scalar>(data: &Matrix<T>, cfg: EncodingConfig) -> Result<Matrix<BigInt>> {
    data.try_map(|z| encode_scalar(z, cfg))
}

pub fn encode_vector<T: Scalar>(data: &[T], cfg: EncodingConfig) -> Result<Vec<BigInt>> {
    data.iter().map(|z| encode_scalar(z, cfg)).collect()
}

/// Polynomial with coefficients in {-1, 0, 1} whose value at x = 2 is the
/// encoded integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MessagePoly {
    coeffs: Vec<i8>,
}

impl MessagePoly {
    /// Trailing zeros are dropped; the zero polynomial keeps one coefficient.
    pub fn new(mut coeffs: Vec<i8>) -> MessagePoly {
        assert!(coeffs.iter().all(|c| (-1..=1).contains(c)), "coefficient outside {{-1, 0, 1}}");
        while coeffs.len() > 1 && coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0);
        }
        MessagePoly { coeffs }
    }

    pub fn coeffs(&self) -> &[i8] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn to_big(&self) -> Vec<BigInt> {
        self.coeffs.iter().map(|&c| BigInt::from(c)).collect()
    }
}

pub fn to_message_poly(v: &EncodedInteger) -> MessagePoly {
    let sign: i8 = if v.sign() == Sign::Minus { -1 } else { 1 };
    let mag = v.magnitude();
    let coeffs = (0..mag.bits()).map(|i| if mag.bit(i) { sign } else { 0 }).collect();
    MessagePoly::new(coeffs)
}

pub fn from_message_poly(p: &MessagePoly) -> EncodedInteger {
    eval_at_two(&p.to_big())
}

/// Horner evaluation at x = 2 for arbitrary integer coefficients.
pub fn eval_at_two(coeffs: &[BigInt]) -> BigInt {
    coeffs
        .iter()
        .rev()
        .fold(BigInt::zero(), |acc, c| (acc << 1) + c)
}

/// Number of nonzero coefficients of the message polynomial of `w`.
pub fn popcount(w: &BigInt) -> u64 {
    w.magnitude().count_ones()
}

/// Degree of the message polynomial of `w`.
pub fn message_degree(w: &BigInt) -> u64 {
    if w.is_zero() || w.magnitude().is_one() {
        0
    } else {
        w.magnitude().bits() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn encodes_scalars() {
        let c2 = EncodingConfig::new(2);
        assert_eq!(encode_scalar(&0.126f64, c2).unwrap(), big(13));
        assert_eq!(encode_scalar(&0.0f64, EncodingConfig::new(7)).unwrap(), big(0));
        assert_eq!(encode_scalar(&-1.005f64, c2).unwrap(), big(-101));
        assert_eq!(encode_scalar(&-1.005f32, c2).unwrap(), big(-101));
        assert!(matches!(encode_scalar(&f64::NAN, c2), Err(ElsError::Encoding(_))));
        assert!(encode_scalar(&f64::NEG_INFINITY, c2).is_err());
    }

    #[test]
    fn decodes_scalars() {
        assert_eq!(decode_scalar::<f64>(&big(123), &big(100)).unwrap(), 1.23);
        assert_eq!(decode_scalar::<f64>(&big(0), &pow10(5)).unwrap(), 0.0);
        let e = encode_scalar(&2.5f64, EncodingConfig::new(2)).unwrap();
        assert_eq!(decode_scalar::<f64>(&e, &big(100)).unwrap(), 2.5);
        assert!(decode_scalar::<f64>(&big(1), &big(0)).is_err());
    }

    #[test]
    fn message_polynomials() {
        assert_eq!(to_message_poly(&big(5)).coeffs(), &[1, 0, 1]);
        assert_eq!(to_message_poly(&big(-5)).coeffs(), &[-1, 0, -1]);
        assert_eq!(to_message_poly(&big(0)).coeffs(), &[0]);
        assert_eq!(to_message_poly(&big(0)).degree(), 0);
        assert_eq!(from_message_poly(&MessagePoly::new(vec![1, 0, 1])), big(5));
        assert_eq!(from_message_poly(&MessagePoly::new(vec![-1, 1])), big(1));
        assert_eq!(message_degree(&big(-8)), 3);
        assert_eq!(popcount(&big(-7)), 3);
    }

    #[test]
    fn encodes_matrices() {
        let m = Matrix::from_rows(&[vec![1.0f64, -0.5]]);
        let e = encode_matrix(&m, EncodingConfig::new(2)).unwrap();
        assert_eq!(e, Matrix::from_rows(&[vec![big(100), big(-50)]]));
        let id = Matrix::<f64>::identity(3);
        assert_eq!(encode_matrix(&id, EncodingConfig::new(0)).unwrap(), id.map(|&v| big(v as i64)));
    }

    #[test]
    fn design_matrix_matches_scalar_loop() {
        let m = Matrix::from_rows(&[
            vec![-1.2247448713915890f64, 0.3333],
            vec![0.0, -1.005],
            vec![1.2247448713915890, 0.6667],
        ]);
        let cfg = EncodingConfig::new(2);
        let e = encode_matrix(&m, cfg).unwrap();
        // shift the printed decimal two places and round on the next digit
        let by_digits = |x: f64| -> i64 {
            let s = format!("{}", x.abs());
            let (int, frac) = s.split_once('.').unwrap_or((&s, ""));
            let frac = format!("{frac:0<3}");
            let mut v: i64 = format!("{int}{}", &frac[..2]).parse().unwrap();
            if frac.as_bytes()[2] >= b'5' {
                v += 1;
            }
            if x < 0.0 {
                -v
            } else {
                v
            }
        };
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(*e.get(i, j), big(by_digits(*m.get(i, j))), "entry ({i}, {j})");
            }
        }
        assert_eq!(*e.get(1, 1), big(-101));
    }

    fn big_int_256() -> impl Strategy<Value = BigInt> {
        (any::<bool>(), prop::collection::vec(any::<u64>(), 4)).prop_map(|(neg, limbs)| {
            let v = limbs.iter().fold(BigInt::zero(), |acc, &l| (acc << 64) + l);
            if neg {
                -v
            } else {
                v
            }
        })
    }

    proptest! {
        #[test]
        fn message_roundtrip(v in big_int_256()) {
            let p = to_message_poly(&v);
            prop_assert_eq!(from_message_poly(&p), v.clone());
            if !v.is_zero() {
                prop_assert_eq!(p.degree() as u64, v.magnitude().bits() - 1);
            }
        }

        #[test]
        fn rounding_error_at_most_half(z in -1.0e6f64..1.0e6, phi in 0u32..6) {
            let cfg = EncodingConfig::new(phi);
            let e = encode_scalar(&z, cfg).unwrap();
            let exact = z.to_rational().unwrap() * BigRational::from_integer(cfg.factor());
            let err = (BigRational::from_integer(e) - exact).abs();
            prop_assert!(err <= BigRational::new(big(1), big(2)));
        }

        #[test]
        fn short_decimals_roundtrip(n in -1_000_000i64..1_000_000, phi in 0u32..5) {
            let cfg = EncodingConfig::new(phi);
            let z = BigRational::new(big(n), cfg.factor());
            let e = encode_scalar(&z, cfg).unwrap();
            prop_assert_eq!(decode_rational(&e, &cfg.factor()).unwrap(), z.clone());
            let zf = n as f64 / 10f64.powi(phi as i32);
            let ef = encode_scalar(&zf, cfg).unwrap();
            prop_assert_eq!(ef, big(n));
        }
    }
}
