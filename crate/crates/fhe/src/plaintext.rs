use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::rns::center_mod;
use crate::{FheError, FvParams, Result};

/// Element of Z_t[x]/(x^d + 1), stored with centred coefficients in
/// (-t/2, t/2].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Plaintext {
    coeffs: Vec<BigInt>,
}

impl Plaintext {
    /// Reduces each coefficient and pads with zeros up to the ring degree.
    pub fn new(coeffs: &[BigInt], params: &FvParams) -> Result<Plaintext> {
        if coeffs.len() > params.d {
            return Err(FheError::PlaintextTooLong {
                got: coeffs.len(),
                d: params.d,
            });
        }
        let mut out = vec![BigInt::zero(); params.d];
        for (o, c) in out.iter_mut().zip(coeffs) {
            *o = center_mod(c, &params.t);
        }
        Ok(Plaintext { coeffs: out })
    }

    pub fn from_i64(coeffs: &[i64], params: &FvParams) -> Result<Plaintext> {
        let big: Vec<BigInt> = coeffs.iter().map(|&c| BigInt::from(c)).collect();
        Plaintext::new(&big, params)
    }

    pub fn zero(params: &FvParams) -> Plaintext {
        Plaintext {
            coeffs: vec![BigInt::zero(); params.d],
        }
    }

    pub(crate) fn from_reduced(coeffs: Vec<BigInt>) -> Plaintext {
        Plaintext { coeffs }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Index of the highest nonzero coefficient, 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
    }

    /// Coefficients up to the degree, dropping the zero tail.
    pub fn trimmed(&self) -> &[BigInt] {
        if self.coeffs.iter().all(|c| c.is_zero()) {
            &self.coeffs[..0]
        } else {
            &self.coeffs[..=self.degree()]
        }
    }

    /// Negacyclic product mod t, quadratic time; a reference for tests.
    pub fn ring_mul(&self, other: &Plaintext, t: &BigUint) -> Plaintext {
        let d = self.coeffs.len();
        let mut out = vec![BigInt::zero(); d];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let p = a * b;
                if i + j < d {
                    out[i + j] += p;
                } else {
                    out[i + j - d] -= p;
                }
            }
        }
        Plaintext {
            coeffs: out.iter().map(|c| center_mod(c, t)).collect(),
        }
    }

    pub fn ring_add(&self, other: &Plaintext, t: &BigUint) -> Plaintext {
        Plaintext {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| center_mod(&(a + b), t))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centres_and_pads() {
        let params = FvParams::with_modulus_bits(8, BigUint::from(10u32), 40, 3.2, 1 << 20).unwrap();
        let p = Plaintext::from_i64(&[5, 6, -5, 13], &params).unwrap();
        let want: Vec<BigInt> = [5, -4, 5, 3, 0, 0, 0, 0].iter().map(|&v| BigInt::from(v)).collect();
        assert_eq!(p.coeffs(), &want[..]);
        assert_eq!(p.degree(), 3);
        assert!(Plaintext::from_i64(&[0; 9], &params).is_err());
        assert_eq!(Plaintext::zero(&params).degree(), 0);
        assert!(Plaintext::zero(&params).trimmed().is_empty());
    }
}
