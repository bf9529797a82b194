//! Symbolic backend propagating worst-case degree and coefficient bounds of
//! message polynomials through a circuit.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::{next_instance, same_instance, Backend};
use crate::encoding::{message_degree, popcount};
use crate::error::{ElsError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundScalar {
    pub degree: u64,
    pub coeff: BigInt,
    pub depth: u32,
    instance: u64,
}

#[derive(Debug)]
pub struct BoundBackend {
    input_degree: u64,
    instance: u64,
}

impl BoundBackend {
    /// Every encrypted input is taken to be an integer of at most
    /// `input_degree + 1` bits.
    pub fn new(input_degree: u64) -> BoundBackend {
        BoundBackend {
            input_degree,
            instance: next_instance(),
        }
    }

    /// Inputs of absolute value at most 10^(phi + 1).
    pub fn for_phi(phi: u32) -> BoundBackend {
        BoundBackend::for_inputs(phi, 10)
    }

    /// Inputs of absolute value at most 10^phi * bound.
    pub fn for_inputs(phi: u32, bound: u32) -> BoundBackend {
        BoundBackend::new(message_degree(&(crate::scalar::pow10(phi) * bound)))
    }

    fn make(&self, degree: u64, coeff: BigInt, depth: u32) -> BoundScalar {
        if coeff.is_zero() {
            return BoundScalar {
                degree: 0,
                coeff,
                depth,
                instance: self.instance,
            };
        }
        BoundScalar {
            degree,
            coeff,
            depth,
            instance: self.instance,
        }
    }

    fn check(&self, a: &BoundScalar) -> Result<()> {
        same_instance(a.instance, self.instance)
    }
}

impl Backend for BoundBackend {
    type Scalar = BoundScalar;

    fn name(&self) -> &'static str {
        "bounds"
    }

    fn encrypt(&self, _v: &BigInt, _nonce: u64) -> Result<BoundScalar> {
        Ok(self.make(self.input_degree, BigInt::one(), 0))
    }

    fn decrypt(&self, _a: &BoundScalar) -> Result<BigInt> {
        Err(ElsError::Backend("the bound backend carries no values".into()))
    }

    fn depth(&self, a: &BoundScalar) -> u32 {
        a.depth
    }

    fn add(&self, a: &BoundScalar, b: &BoundScalar) -> Result<BoundScalar> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.make(a.degree.max(b.degree), &a.coeff + &b.coeff, a.depth.max(b.depth)))
    }

    fn neg(&self, a: &BoundScalar) -> Result<BoundScalar> {
        self.check(a)?;
        Ok(a.clone())
    }

    fn mul(&self, a: &BoundScalar, b: &BoundScalar) -> Result<BoundScalar> {
        self.check(a)?;
        self.check(b)?;
        let overlap = a.degree.min(b.degree) + 1;
        Ok(self.make(
            a.degree + b.degree,
            &a.coeff * &b.coeff * overlap,
            a.depth.max(b.depth) + 1,
        ))
    }

    fn plain_mul(&self, a: &BoundScalar, w: &BigInt) -> Result<BoundScalar> {
        self.check(a)?;
        let overlap = popcount(w).min(a.degree + 1);
        Ok(self.make(a.degree + message_degree(w), &a.coeff * overlap, a.depth + 1))
    }

    fn plain_add(&self, a: &BoundScalar, w: &BigInt) -> Result<BoundScalar> {
        self.check(a)?;
        let c = if w.is_zero() { a.coeff.clone() } else { &a.coeff + 1u32 };
        Ok(self.make(a.degree.max(message_degree(w)), c, a.depth))
    }

    fn scalar_to_bytes(&self, _a: &BoundScalar) -> Vec<u8> {
        Vec::new()
    }

    fn scalar_from_bytes(&self, _buf: &[u8]) -> Result<BoundScalar> {
        Err(ElsError::Backend("the bound backend has no serialized form".into()))
    }

    fn key_id(&self) -> String {
        "bounds".into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::OracleBackend;
    use proptest::prelude::*;

    #[test]
    fn input_degree_from_phi() {
        // 1000 has 10 bits
        assert_eq!(BoundBackend::for_phi(2).input_degree, 9);
        assert_eq!(BoundBackend::for_phi(0).input_degree, 3);
    }

    #[derive(Clone, Debug)]
    enum Op {
        Add(usize, usize),
        Sub(usize, usize),
        Mul(usize, usize),
        PlainMul(usize, i64),
        PlainAdd(usize, i64),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0..64usize, 0..64usize).prop_map(|(a, b)| Op::Add(a, b)),
            (0..64usize, 0..64usize).prop_map(|(a, b)| Op::Sub(a, b)),
            (0..64usize, 0..64usize).prop_map(|(a, b)| Op::Mul(a, b)),
            (0..64usize, -5000i64..5000).prop_map(|(a, w)| Op::PlainMul(a, w)),
            (0..64usize, -5000i64..5000).prop_map(|(a, w)| Op::PlainAdd(a, w)),
        ]
    }

    proptest! {
        #[test]
        fn bounds_dominate_polynomial_oracle(
            inputs in prop::collection::vec(-999i64..=999, 2..6),
            ops in prop::collection::vec(op(), 1..12),
        ) {
            let oracle = OracleBackend::polynomial();
            let bounds = BoundBackend::for_phi(2);
            let mut o: Vec<_> = inputs.iter().map(|&v| oracle.encrypt(&BigInt::from(v), 0).unwrap()).collect();
            let mut b: Vec<_> = inputs.iter().map(|&v| bounds.encrypt(&BigInt::from(v), 0).unwrap()).collect();
            for op in ops {
                let n = o.len();
                let (x, y) = match op {
                    Op::Add(i, j) => (oracle.add(&o[i % n], &o[j % n]), bounds.add(&b[i % n], &b[j % n])),
                    Op::Sub(i, j) => (oracle.sub(&o[i % n], &o[j % n]), bounds.sub(&b[i % n], &b[j % n])),
                    Op::Mul(i, j) => (oracle.mul(&o[i % n], &o[j % n]), bounds.mul(&b[i % n], &b[j % n])),
                    Op::PlainMul(i, w) => (oracle.plain_mul(&o[i % n], &BigInt::from(w)), bounds.plain_mul(&b[i % n], &BigInt::from(w))),
                    Op::PlainAdd(i, w) => (oracle.plain_add(&o[i % n], &BigInt::from(w)), bounds.plain_add(&b[i % n], &BigInt::from(w))),
                };
                o.push(x.unwrap());
                b.push(y.unwrap());
            }
            for (x, y) in o.iter().zip(&b) {
                let poly = x.poly().unwrap();
                let top = poly.iter().rposition(|c| !c.is_zero()).unwrap_or(0) as u64;
                prop_assert!(top <= y.degree);
                prop_assert!(crate::backend::oracle::max_abs(poly) <= y.coeff);
                prop_assert_eq!(x.depth(), y.depth);
            }
        }
    }
}
