//! Cleartext backend computing the exact integers an ideal, noiseless
//! encrypted evaluation would decrypt to.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::{check_dot, next_instance, same_instance, Backend};
use crate::encoding::{eval_at_two, to_message_poly};
use crate::error::{ElsError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    /// Plain big integers.
    Integer,
    /// Also carries the message polynomial, as FV would see it, and fails
    /// once its degree reaches `max_degree`.
    Polynomial { max_degree: Option<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleScalar {
    value: BigInt,
    poly: Option<Vec<BigInt>>,
    depth: u32,
    instance: u64,
}

impl OracleScalar {
    pub fn value(&self) -> &BigInt {
        &self.value
    }

    /// Message polynomial coefficients, lowest degree first.
    pub fn poly(&self) -> Option<&[BigInt]> {
        self.poly.as_deref()
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }
}

#[derive(Debug)]
pub struct OracleBackend {
    mode: OracleMode,
    instance: u64,
}

impl Default for OracleBackend {
    fn default() -> Self {
        OracleBackend::new(OracleMode::Integer)
    }
}

fn trim(mut p: Vec<BigInt>) -> Vec<BigInt> {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
    if p.is_empty() {
        p.push(BigInt::zero());
    }
    p
}

fn poly_add(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut out = long.to_vec();
    for (o, s) in out.iter_mut().zip(short) {
        *o += s;
    }
    trim(out)
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    trim(out)
}

fn message(v: &BigInt) -> Vec<BigInt> {
    to_message_poly(v).to_big()
}

impl OracleBackend {
    pub fn new(mode: OracleMode) -> OracleBackend {
        OracleBackend {
            mode,
            instance: next_instance(),
        }
    }

    pub fn polynomial() -> OracleBackend {
        OracleBackend::new(OracleMode::Polynomial { max_degree: None })
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }

    fn make(&self, value: BigInt, poly: Option<Vec<BigInt>>, depth: u32) -> Result<OracleScalar> {
        if let (Some(p), OracleMode::Polynomial { max_degree: Some(max) }) = (&poly, self.mode) {
            if p.len() > max {
                return Err(ElsError::Backend(format!(
                    "message polynomial degree {} reaches the ring degree {max}",
                    p.len() - 1
                )));
            }
        }
        Ok(OracleScalar {
            value,
            poly,
            depth,
            instance: self.instance,
        })
    }

    fn check(&self, a: &OracleScalar) -> Result<()> {
        same_instance(a.instance, self.instance)
    }

    fn combine(
        &self,
        a: &OracleScalar,
        b: &OracleScalar,
        value: BigInt,
        f: impl Fn(&[BigInt], &[BigInt]) -> Vec<BigInt>,
        depth: u32,
    ) -> Result<OracleScalar> {
        self.check(a)?;
        self.check(b)?;
        let poly = match (&a.poly, &b.poly) {
            (Some(x), Some(y)) => Some(f(x, y)),
            _ => None,
        };
        self.make(value, poly, depth)
    }
}

impl Backend for OracleBackend {
    type Scalar = OracleScalar;

    fn name(&self) -> &'static str {
        "oracle"
    }

    fn encrypt(&self, v: &BigInt, _nonce: u64) -> Result<OracleScalar> {
        let poly = match self.mode {
            OracleMode::Integer => None,
            OracleMode::Polynomial { .. } => Some(message(v)),
        };
        self.make(v.clone(), poly, 0)
    }

    fn decrypt(&self, a: &OracleScalar) -> Result<BigInt> {
        self.check(a)?;
        Ok(a.value.clone())
    }

    fn depth(&self, a: &OracleScalar) -> u32 {
        a.depth
    }

    fn add(&self, a: &OracleScalar, b: &OracleScalar) -> Result<OracleScalar> {
        self.combine(a, b, &a.value + &b.value, poly_add, a.depth.max(b.depth))
    }

    fn neg(&self, a: &OracleScalar) -> Result<OracleScalar> {
        self.check(a)?;
        let poly = a.poly.as_ref().map(|p| p.iter().map(|c| -c).collect());
        self.make(-&a.value, poly, a.depth)
    }

    fn sub(&self, a: &OracleScalar, b: &OracleScalar) -> Result<OracleScalar> {
        self.combine(
            a,
            b,
            &a.value - &b.value,
            |x, y| poly_add(x, &y.iter().map(|c| -c).collect::<Vec<_>>()),
            a.depth.max(b.depth),
        )
    }

    fn mul(&self, a: &OracleScalar, b: &OracleScalar) -> Result<OracleScalar> {
        self.combine(a, b, &a.value * &b.value, poly_mul, a.depth.max(b.depth) + 1)
    }

    fn plain_mul(&self, a: &OracleScalar, w: &BigInt) -> Result<OracleScalar> {
        self.check(a)?;
        let poly = a.poly.as_ref().map(|p| poly_mul(p, &message(w)));
        self.make(&a.value * w, poly, a.depth + 1)
    }

    fn plain_add(&self, a: &OracleScalar, w: &BigInt) -> Result<OracleScalar> {
        self.check(a)?;
        let poly = a.poly.as_ref().map(|p| poly_add(p, &message(w)));
        self.make(&a.value + w, poly, a.depth)
    }

    fn dot(&self, a: &[OracleScalar], b: &[OracleScalar]) -> Result<OracleScalar> {
        check_dot(a.len(), b.len())?;
        if self.mode != OracleMode::Integer {
            let mut acc = self.mul(&a[0], &b[0])?;
            for (x, y) in a.iter().zip(b).skip(1) {
                acc = self.add(&acc, &self.mul(x, y)?)?;
            }
            return Ok(acc);
        }
        let mut value = BigInt::zero();
        let mut depth = 0;
        for (x, y) in a.iter().zip(b) {
            self.check(x)?;
            self.check(y)?;
            value += &x.value * &y.value;
            depth = depth.max(x.depth).max(y.depth);
        }
        self.make(value, None, depth + 1)
    }

    fn lin_comb(&self, terms: &[(&OracleScalar, BigInt)]) -> Result<OracleScalar> {
        if terms.is_empty() {
            return Err(ElsError::Backend("empty linear combination".into()));
        }
        if self.mode != OracleMode::Integer {
            let mut acc = self.plain_mul(terms[0].0, &terms[0].1)?;
            for (a, w) in &terms[1..] {
                acc = self.add(&acc, &self.plain_mul(a, w)?)?;
            }
            return Ok(acc);
        }
        let mut value = BigInt::zero();
        let mut depth = 0;
        for (a, w) in terms {
            self.check(a)?;
            value += &a.value * w;
            depth = depth.max(a.depth);
        }
        self.make(value, None, depth + 1)
    }

    fn scalar_to_bytes(&self, a: &OracleScalar) -> Vec<u8> {
        let mag = a.value.to_signed_bytes_le();
        let mut out = Vec::with_capacity(8 + mag.len());
        out.extend_from_slice(&a.depth.to_le_bytes());
        out.extend_from_slice(&(mag.len() as u32).to_le_bytes());
        out.extend_from_slice(&mag);
        out
    }

    fn scalar_from_bytes(&self, buf: &[u8]) -> Result<OracleScalar> {
        let bad = || ElsError::Format("truncated oracle scalar".into());
        if buf.len() < 8 {
            return Err(bad());
        }
        let depth = u32::from_le_bytes(buf[..4].try_into().unwrap());
        let len = u32::from_le_bytes(buf[4..8].try_into().unwrap()) as usize;
        if buf.len() != 8 + len {
            return Err(bad());
        }
        let value = BigInt::from_signed_bytes_le(&buf[8..]);
        let poly = match self.mode {
            OracleMode::Integer => None,
            OracleMode::Polynomial { .. } => Some(message(&value)),
        };
        self.make(value, poly, depth)
    }

    fn key_id(&self) -> String {
        "oracle".into()
    }
}

/// Largest |coefficient| of a message polynomial.
pub fn max_abs(poly: &[BigInt]) -> BigInt {
    poly.iter().map(|c| c.abs()).max().unwrap_or_default()
}

/// Value of a message polynomial at 2.
pub fn poly_value(poly: &[BigInt]) -> BigInt {
    eval_at_two(poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn exact_arithmetic_and_depth() {
        let b = OracleBackend::default();
        let e = |v| b.encrypt(&big(v), 0).unwrap();
        let r = b.add(&b.mul(&e(3), &e(4)).unwrap(), &e(5)).unwrap();
        assert_eq!(b.decrypt(&r).unwrap(), big(17));
        assert_eq!(b.depth(&r), 1);
        let mut c = e(2);
        for k in 1..=5 {
            c = b.mul(&c, &e(1)).unwrap();
            assert_eq!(b.depth(&c), k);
        }
        let d = b.dot(&[e(1), e(2)], &[e(3), e(4)]).unwrap();
        assert_eq!((b.decrypt(&d).unwrap(), b.depth(&d)), (big(11), 1));
        let z = b.dot(&[e(0), e(0)], &[e(3), e(4)]).unwrap();
        assert_eq!(b.decrypt(&z).unwrap(), big(0));
        assert!(b.dot(&[e(1)], &[e(1), e(2)]).is_err());
        let pm = b.plain_mul(&e(7), &big(2)).unwrap();
        assert_eq!((b.decrypt(&pm).unwrap(), b.depth(&pm)), (big(14), 1));
        let pa = b.plain_add(&pm, &big(0)).unwrap();
        assert_eq!((b.decrypt(&pa).unwrap(), b.depth(&pa)), (big(14), 1));
    }

    #[test]
    fn product_depths() {
        let b = OracleBackend::default();
        for p in 1..=9usize {
            let xs: Vec<_> = (0..p).map(|i| b.encrypt(&big(i as i64 + 1), 0).unwrap()).collect();
            let chain = b.product(&xs).unwrap();
            let tree = b.product_balanced(&xs).unwrap();
            let fact: i64 = (1..=p as i64).product();
            assert_eq!(b.decrypt(&chain).unwrap(), big(fact));
            assert_eq!(b.decrypt(&tree).unwrap(), big(fact));
            assert_eq!(b.depth(&chain), p as u32 - 1);
            assert_eq!(b.depth(&tree), (p as f64).log2().ceil() as u32);
        }
    }

    #[test]
    fn rejects_foreign_scalars() {
        let a = OracleBackend::default();
        let b = OracleBackend::default();
        let x = a.encrypt(&big(1), 0).unwrap();
        let y = b.encrypt(&big(1), 0).unwrap();
        assert!(matches!(a.add(&x, &y), Err(ElsError::Backend(_))));
        assert!(a.decrypt(&y).is_err());
    }

    #[test]
    fn polynomial_mode_tracks_message_polynomials() {
        let b = OracleBackend::polynomial();
        let x = b.encrypt(&big(5), 0).unwrap();
        let y = b.encrypt(&big(-3), 0).unwrap();
        let r = b.plain_add(&b.sub(&b.mul(&x, &y).unwrap(), &x).unwrap(), &big(6)).unwrap();
        assert_eq!(b.decrypt(&r).unwrap(), big(-14));
        assert_eq!(poly_value(r.poly().unwrap()), big(-14));
        // (1 + x^2)(-1 - x) = -1 - x - x^2 - x^3
        let m = b.mul(&x, &y).unwrap();
        assert_eq!(m.poly().unwrap(), &[big(-1), big(-1), big(-1), big(-1)]);
        assert_eq!(max_abs(m.poly().unwrap()), big(1));
        let sq = b.mul(&m, &m).unwrap();
        assert_eq!(max_abs(sq.poly().unwrap()), big(4));

        let small = OracleBackend::new(OracleMode::Polynomial { max_degree: Some(5) });
        let x = small.encrypt(&big(5), 0).unwrap();
        assert!(small.mul(&x, &x).is_ok());
        let x4 = small.mul(&x, &x).unwrap();
        assert!(small.mul(&x4, &x).is_err());
    }

    #[test]
    fn scalar_bytes_roundtrip() {
        let b = OracleBackend::default();
        let x = b.plain_mul(&b.encrypt(&big(-123456789), 0).unwrap(), &big(1 << 40)).unwrap();
        let y = b.scalar_from_bytes(&b.scalar_to_bytes(&x)).unwrap();
        assert_eq!(x, y);
        assert!(b.scalar_from_bytes(&[1, 2]).is_err());
    }
}
