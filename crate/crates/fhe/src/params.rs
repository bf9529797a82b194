use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use sha2::{Digest, Sha256};

use crate::modular::{ntt_primes, Modulus};
use crate::ntt::NttTable;
use crate::rns::{BaseConverter, RnsBasis};
use crate::{FheError, Result};

pub const DEFAULT_SIGMA: f64 = 3.2;
pub const DEFAULT_RELIN_BASE: u64 = 1 << 30;

/// Longest fused dot product evaluated in one extended-basis accumulation;
/// longer products are split into chunks.
pub const DEFAULT_MAX_FUSED_TERMS: usize = 1 << 12;

const PRIME_BITS: u32 = 60;

#[derive(Clone, Debug, PartialEq)]
pub struct FvParams {
    pub d: usize,
    pub t: BigUint,
    /// Prime factors of the ciphertext modulus q.
    pub moduli: Vec<u64>,
    pub sigma: f64,
    pub relin_base: u64,
}

impl FvParams {
    pub fn new(d: usize, t: BigUint, moduli: Vec<u64>, sigma: f64, relin_base: u64) -> Result<Self> {
        let p = FvParams {
            d,
            t,
            moduli,
            sigma,
            relin_base,
        };
        p.validate()?;
        Ok(p)
    }

    /// Picks the largest NTT-friendly primes whose product has roughly
    /// `q_bits` bits.
    pub fn with_modulus_bits(
        d: usize,
        t: BigUint,
        q_bits: u32,
        sigma: f64,
        relin_base: u64,
    ) -> Result<Self> {
        if !d.is_power_of_two() || d < 2 {
            return Err(FheError::InvalidParams(format!("ring degree {d} is not a power of two")));
        }
        if q_bits < 20 {
            return Err(FheError::InvalidParams(format!("q of {q_bits} bits is too small")));
        }
        let count = q_bits.div_ceil(PRIME_BITS);
        let bits = q_bits.div_ceil(count).min(PRIME_BITS);
        let moduli = ntt_primes(bits, 2 * d as u64, count as usize, &[]);
        FvParams::new(d, t, moduli, sigma, relin_base)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FheError::InvalidParams(m));
        if !self.d.is_power_of_two() || self.d < 2 {
            return bad(format!("ring degree {} is not a power of two", self.d));
        }
        if self.t < BigUint::from(2u32) {
            return bad("plaintext modulus must be at least 2".into());
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("error deviation {} must be positive", self.sigma));
        }
        if self.relin_base < 2 {
            return bad("relinearization base must be at least 2".into());
        }
        if self.moduli.is_empty() {
            return bad("no ciphertext moduli".into());
        }
        for (i, &p) in self.moduli.iter().enumerate() {
            if p >= 1 << 61 || !crate::modular::is_prime(p) || p % (2 * self.d as u64) != 1 {
                return bad(format!("modulus {p} is not a prime = 1 mod 2d below 2^61"));
            }
            if self.moduli[..i].contains(&p) {
                return bad(format!("modulus {p} repeated"));
            }
        }
        if self.q() <= self.t {
            return bad("ciphertext modulus must exceed plaintext modulus".into());
        }
        Ok(())
    }

    pub fn q(&self) -> BigUint {
        self.moduli
            .iter()
            .fold(BigUint::one(), |acc, &p| acc * BigUint::from(p))
    }

    pub fn log2_q(&self) -> f64 {
        self.moduli.iter().map(|&p| (p as f64).log2()).sum()
    }

    pub fn log2_t(&self) -> f64 {
        log2_big(&self.t)
    }

    /// Stable digest of the parameter set.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"fv-params-v1");
        h.update((self.d as u64).to_le_bytes());
        h.update(self.t.to_bytes_le());
        for p in &self.moduli {
            h.update(p.to_le_bytes());
        }
        h.update(self.sigma.to_le_bytes());
        h.update(self.relin_base.to_le_bytes());
        let out = h.finalize();
        u64::from_le_bytes(out[..8].try_into().unwrap())
    }
}

pub(crate) fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_f64().unwrap().log2();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().log2() + shift as f64
}

/// Precomputed tables for one parameter set. Immutable and shareable.
#[derive(Debug)]
pub struct FvContext {
    pub(crate) params: FvParams,
    pub(crate) fingerprint: u64,
    pub(crate) ext_fingerprint: u64,
    pub(crate) q: RnsBasis,
    pub(crate) q_ntt: Vec<NttTable>,
    pub(crate) aux: RnsBasis,
    pub(crate) aux_ntt: Vec<NttTable>,
    pub(crate) q_to_aux: BaseConverter,
    pub(crate) aux_to_q: BaseConverter,
    pub(crate) t_mod_q: Vec<u64>,
    pub(crate) t_mod_aux: Vec<u64>,
    pub(crate) delta_mod_q: Vec<u64>,
    pub(crate) q_inv_mod_aux: Vec<u64>,
    pub(crate) delta: BigUint,
    pub(crate) digits: usize,
    pub(crate) max_fused_terms: usize,
}

impl FvContext {
    pub fn new(params: FvParams) -> Result<Arc<FvContext>> {
        FvContext::with_max_fused_terms(params, DEFAULT_MAX_FUSED_TERMS)
    }

    pub fn with_max_fused_terms(params: FvParams, max_fused_terms: usize) -> Result<Arc<FvContext>> {
        params.validate()?;
        let max_fused_terms = max_fused_terms.max(1);
        let d = params.d;
        let q = RnsBasis::new(&params.moduli);
        let q_ntt: Vec<NttTable> = q
            .moduli()
            .iter()
            .map(|&m| NttTable::new(m, d).expect("validated prime"))
            .collect();
        // room for t * (sum of 2L products of centred q-residues) with slack
        let need = params.log2_t()
            + params.log2_q()
            + (d as f64).log2()
            + ((2 * max_fused_terms) as f64).log2()
            + 6.0;
        let count = (need / (PRIME_BITS as f64 - 1.0)).ceil() as usize;
        let aux_primes = ntt_primes(PRIME_BITS, 2 * d as u64, count, &params.moduli);
        let aux = RnsBasis::new(&aux_primes);
        let aux_ntt = aux
            .moduli()
            .iter()
            .map(|&m| NttTable::new(m, d).expect("generated prime"))
            .collect();
        let q_to_aux = BaseConverter::new(&q, aux.moduli());
        let aux_to_q = BaseConverter::new(&aux, q.moduli());
        let big_q = q.product().clone();
        let delta = &big_q / &params.t;
        let residues = |x: &BigUint, ms: &[Modulus]| -> Vec<u64> {
            ms.iter().map(|m| (x % m.value()).to_u64().unwrap()).collect()
        };
        let t_mod_q = residues(&params.t, q.moduli());
        let t_mod_aux = residues(&params.t, aux.moduli());
        let delta_mod_q = residues(&delta, q.moduli());
        let q_inv_mod_aux = aux
            .moduli()
            .iter()
            .map(|m| m.inv((&big_q % m.value()).to_u64().unwrap()).unwrap())
            .collect();
        let max_q = *params.moduli.iter().max().unwrap();
        let mut digits = 0;
        let mut rest = max_q - 1;
        while rest > 0 {
            rest /= params.relin_base;
            digits += 1;
        }
        let ext_fingerprint = aux_primes
            .iter()
            .fold(params.fingerprint(), |h, &p| h.rotate_left(17) ^ p.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        Ok(Arc::new(FvContext {
            fingerprint: params.fingerprint(),
            ext_fingerprint,
            params,
            q,
            q_ntt,
            aux,
            aux_ntt,
            q_to_aux,
            aux_to_q,
            t_mod_q,
            t_mod_aux,
            delta_mod_q,
            q_inv_mod_aux,
            delta,
            digits,
            max_fused_terms,
        }))
    }

    pub fn params(&self) -> &FvParams {
        &self.params
    }

    pub fn degree(&self) -> usize {
        self.params.d
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// floor(q / t), the plaintext scaling factor.
    pub fn delta(&self) -> &BigUint {
        &self.delta
    }

    /// Number of word-sized primes in q and in the auxiliary basis.
    pub fn basis_sizes(&self) -> (usize, usize) {
        (self.q.len(), self.aux.len())
    }

    pub fn relin_digits(&self) -> usize {
        self.digits * self.q.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        let t = BigUint::from(65537u32);
        assert!(matches!(
            FvParams::with_modulus_bits(15, t.clone(), 60, 3.2, 1 << 30),
            Err(FheError::InvalidParams(_))
        ));
        let ok = FvParams::with_modulus_bits(16, t.clone(), 60, 3.2, 1 << 30).unwrap();
        let mut q_small = ok.clone();
        q_small.t = ok.q() + 1u32;
        assert!(q_small.validate().is_err());
        let mut no_sigma = ok.clone();
        no_sigma.sigma = 0.0;
        assert!(no_sigma.validate().is_err());
        let mut base_one = ok.clone();
        base_one.relin_base = 1;
        assert!(base_one.validate().is_err());
        let mut composite = ok;
        composite.moduli = vec![33];
        assert!(composite.validate().is_err());
    }

    #[test]
    fn modulus_bits_are_close_to_request() {
        let p = FvParams::with_modulus_bits(1024, BigUint::from(256u32), 200, 3.2, 1 << 30).unwrap();
        assert_eq!(p.moduli.len(), 4);
        assert!(p.log2_q() > 198.0 && p.log2_q() <= 200.0);
    }

    #[test]
    fn fingerprint_distinguishes_parameters() {
        let a = FvParams::with_modulus_bits(16, BigUint::from(257u32), 60, 3.2, 1 << 30).unwrap();
        let mut b = a.clone();
        b.t = BigUint::from(263u32);
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
    }
}
