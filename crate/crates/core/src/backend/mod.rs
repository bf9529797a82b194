//! Encrypted arithmetic behind one interface, so the descent engine runs
//! unchanged on FV ciphertexts, exact integers or symbolic bounds.

use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;

use crate::error::{ElsError, Result};

pub mod bound;
pub mod fv;
pub mod oracle;

pub use bound::{BoundBackend, BoundScalar};
pub use fv::{FvBackend, FvScalar};
pub use oracle::{OracleBackend, OracleMode, OracleScalar};

static NEXT_INSTANCE: AtomicU64 = AtomicU64::new(1);

pub(crate) fn next_instance() -> u64 {
    NEXT_INSTANCE.fetch_add(1, Ordering::Relaxed)
}

pub(crate) fn same_instance(a: u64, b: u64) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(ElsError::Backend("scalars come from different backend instances".into()))
    }
}

pub trait Backend: Sync {
    type Scalar: Clone + Send + Sync;

    fn name(&self) -> &'static str;

    /// Encrypts an encoded integer. `nonce` must be unique per call for a
    /// given key; it fixes the encryption randomness.
    fn encrypt(&self, v: &BigInt, nonce: u64) -> Result<Self::Scalar>;

    fn decrypt(&self, a: &Self::Scalar) -> Result<BigInt>;

    fn depth(&self, a: &Self::Scalar) -> u32;

    fn add(&self, a: &Self::Scalar, b: &Self::Scalar) -> Result<Self::Scalar>;

    fn neg(&self, a: &Self::Scalar) -> Result<Self::Scalar>;

    fn mul(&self, a: &Self::Scalar, b: &Self::Scalar) -> Result<Self::Scalar>;

    /// Product with a known integer; counts as one level.
    fn plain_mul(&self, a: &Self::Scalar, w: &BigInt) -> Result<Self::Scalar>;

    fn plain_add(&self, a: &Self::Scalar, w: &BigInt) -> Result<Self::Scalar>;

    fn sub(&self, a: &Self::Scalar, b: &Self::Scalar) -> Result<Self::Scalar> {
        self.add(a, &self.neg(b)?)
    }

    /// Sum of pairwise products, one level above the deepest input.
    fn dot(&self, a: &[Self::Scalar], b: &[Self::Scalar]) -> Result<Self::Scalar> {
        check_dot(a.len(), b.len())?;
        let mut acc = self.mul(&a[0], &b[0])?;
        for (x, y) in a.iter().zip(b).skip(1) {
            acc = self.add(&acc, &self.mul(x, y)?)?;
        }
        Ok(acc)
    }

    /// sum_i w_i a_i with known integer weights.
    fn lin_comb(&self, terms: &[(&Self::Scalar, BigInt)]) -> Result<Self::Scalar> {
        let Some(((first, w0), rest)) = terms.split_first() else {
            return Err(ElsError::Backend("empty linear combination".into()));
        };
        let mut acc = self.plain_mul(first, w0)?;
        for (a, w) in rest {
            acc = self.add(&acc, &self.plain_mul(a, w)?)?;
        }
        Ok(acc)
    }

    /// Left-to-right chain: P fresh inputs end at depth P - 1, the
    /// degree-minus-one count of the product.
    fn product(&self, xs: &[Self::Scalar]) -> Result<Self::Scalar> {
        let (first, rest) = xs
            .split_first()
            .ok_or_else(|| ElsError::Backend("empty product".into()))?;
        rest.iter().try_fold(first.clone(), |acc, x| self.mul(&acc, x))
    }

    /// Pairwise tree: P fresh inputs end at depth ceil(log2 P).
    fn product_balanced(&self, xs: &[Self::Scalar]) -> Result<Self::Scalar> {
        if xs.is_empty() {
            return Err(ElsError::Backend("empty product".into()));
        }
        let mut layer: Vec<Self::Scalar> = xs.to_vec();
        while layer.len() > 1 {
            let mut next = Vec::with_capacity(layer.len().div_ceil(2));
            for pair in layer.chunks(2) {
                next.push(match pair {
                    [a, b] => self.mul(a, b)?,
                    [a] => a.clone(),
                    _ => unreachable!(),
                });
            }
            layer = next;
        }
        Ok(layer.pop().unwrap())
    }

    fn scalar_to_bytes(&self, a: &Self::Scalar) -> Vec<u8>;

    fn scalar_from_bytes(&self, buf: &[u8]) -> Result<Self::Scalar>;

    /// Identifies the key material (or oracle instance configuration) so
    /// stored artifacts can be matched to it.
    fn key_id(&self) -> String;
}

pub(crate) fn check_dot(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(ElsError::Backend(format!("dot of lengths {a} and {b}")));
    }
    if a == 0 {
        return Err(ElsError::Backend("empty dot product".into()));
    }
    Ok(())
}
