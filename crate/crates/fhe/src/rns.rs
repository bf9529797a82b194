//! Residue number system bases and fast base conversion.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::modular::Modulus;

/// A product of distinct word-sized primes.
#[derive(Clone, Debug)]
pub struct RnsBasis {
    moduli: Vec<Modulus>,
    product: BigUint,
    half: BigUint,
    punctured: Vec<BigUint>,
    punctured_inv: Vec<u64>,
    punctured_inv_shoup: Vec<u64>,
}

impl RnsBasis {
    pub fn new(primes: &[u64]) -> RnsBasis {
        assert!(!primes.is_empty());
        let moduli: Vec<Modulus> = primes.iter().map(|&p| Modulus::new(p)).collect();
        let product = primes
            .iter()
            .fold(BigUint::one(), |acc, &p| acc * BigUint::from(p));
        let punctured: Vec<BigUint> = primes.iter().map(|&p| &product / p).collect();
        let punctured_inv: Vec<u64> = moduli
            .iter()
            .zip(&punctured)
            .map(|(m, qi)| {
                let r = (qi % m.value()).to_u64().unwrap();
                m.inv(r).expect("RNS primes must be distinct")
            })
            .collect();
        let punctured_inv_shoup = moduli
            .iter()
            .zip(&punctured_inv)
            .map(|(m, &v)| m.shoup(v))
            .collect();
        let half = &product >> 1;
        RnsBasis {
            moduli,
            product,
            half,
            punctured,
            punctured_inv,
            punctured_inv_shoup,
        }
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    pub fn moduli(&self) -> &[Modulus] {
        &self.moduli
    }

    pub fn product(&self) -> &BigUint {
        &self.product
    }

    pub fn residues(&self, x: &BigInt) -> Vec<u64> {
        self.moduli.iter().map(|m| residue(x, m.value())).collect()
    }

    /// CRT reconstruction into [0, q).
    pub fn compose(&self, residues: &[u64]) -> BigUint {
        let mut acc = BigUint::zero();
        for i in 0..self.len() {
            let y = self.moduli[i].mul_shoup(
                residues[i],
                self.punctured_inv[i],
                self.punctured_inv_shoup[i],
            );
            acc += &self.punctured[i] * y;
        }
        acc % &self.product
    }

    /// CRT reconstruction into (-q/2, q/2].
    pub fn compose_centered(&self, residues: &[u64]) -> BigInt {
        center(self.compose(residues), &self.product, &self.half)
    }

    /// (q / q_i)^-1 mod q_i, for digit decomposition.
    pub fn punctured_inverse(&self, i: usize) -> (u64, u64) {
        (self.punctured_inv[i], self.punctured_inv_shoup[i])
    }

    pub fn punctured_product(&self, i: usize) -> &BigUint {
        &self.punctured[i]
    }
}

/// x mod p for a signed big integer, in [0, p).
pub fn residue(x: &BigInt, p: u64) -> u64 {
    let r = (x.magnitude() % p).to_u64().unwrap();
    if x.sign() == Sign::Minus && r != 0 {
        p - r
    } else {
        r
    }
}

fn center(x: BigUint, q: &BigUint, half: &BigUint) -> BigInt {
    if &x > half {
        BigInt::from_biguint(Sign::Minus, q - x)
    } else {
        BigInt::from(x)
    }
}

/// Centred reduction of `x` modulo `m` into (-m/2, m/2].
pub fn center_mod(x: &BigInt, m: &BigUint) -> BigInt {
    let m_int = BigInt::from(m.clone());
    let r = x.mod_floor(&m_int);
    center(r.to_biguint().unwrap(), m, &(m >> 1))
}

/// Converts residues in one basis to residues of the centred representative
/// in another basis. The quotient estimate uses double precision, so the
/// result is exact unless the input sits within about 2^-45 q of +-q/2.
#[derive(Clone, Debug)]
pub struct BaseConverter {
    from: RnsBasis,
    to: Vec<Modulus>,
    // (q / q_i) mod p_j, indexed [j][i]
    table: Vec<Vec<u64>>,
    q_mod_to: Vec<u64>,
    inv_from: Vec<f64>,
}

impl BaseConverter {
    pub fn new(from: &RnsBasis, to: &[Modulus]) -> BaseConverter {
        let table = to
            .iter()
            .map(|pj| {
                (0..from.len())
                    .map(|i| (from.punctured_product(i) % pj.value()).to_u64().unwrap())
                    .collect()
            })
            .collect();
        let q_mod_to = to
            .iter()
            .map(|pj| (from.product() % pj.value()).to_u64().unwrap())
            .collect();
        let inv_from = from.moduli().iter().map(|m| 1.0 / m.value() as f64).collect();
        BaseConverter {
            from: from.clone(),
            to: to.to_vec(),
            table,
            q_mod_to,
            inv_from,
        }
    }

    /// `input` is prime-major with `from.len()` rows of length `n`; the
    /// result is prime-major with `to.len()` rows.
    pub fn convert(&self, input: &[u64], n: usize) -> Vec<u64> {
        let k = self.from.len();
        assert_eq!(input.len(), k * n);
        let mut y = vec![0u64; k * n];
        let mut frac = vec![0f64; n];
        for i in 0..k {
            let m = &self.from.moduli()[i];
            let (inv, inv_shoup) = self.from.punctured_inverse(i);
            let row = &input[i * n..(i + 1) * n];
            let yrow = &mut y[i * n..(i + 1) * n];
            for c in 0..n {
                let v = m.mul_shoup(row[c], inv, inv_shoup);
                yrow[c] = v;
                frac[c] += v as f64 * self.inv_from[i];
            }
        }
        let v: Vec<u64> = frac.iter().map(|f| f.round() as u64).collect();
        let mut out = vec![0u64; self.to.len() * n];
        let mut acc = vec![0u128; n];
        for (j, pj) in self.to.iter().enumerate() {
            acc.iter_mut().for_each(|a| *a = 0);
            for i in 0..k {
                let w = self.table[j][i] as u128;
                let yrow = &y[i * n..(i + 1) * n];
                for c in 0..n {
                    acc[c] += yrow[c] as u128 * w;
                }
                if i % 96 == 95 {
                    acc.iter_mut().for_each(|a| *a = pj.reduce_u128(*a) as u128);
                }
            }
            let qj = self.q_mod_to[j];
            let orow = &mut out[j * n..(j + 1) * n];
            for c in 0..n {
                let s = pj.reduce_u128(acc[c]);
                orow[c] = pj.sub(s, pj.mul(pj.reduce(v[c]), qj));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::ntt_primes;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_centered(rng: &mut ChaCha8Rng, half: &BigInt) -> BigInt {
        let limbs: Vec<u32> = (0..(half.bits() / 32 + 2)).map(|_| rng.random()).collect();
        let x = BigInt::from(BigUint::new(limbs));
        let width = half * 2 + 1;
        x.mod_floor(&width) - half
    }

    #[test]
    fn compose_inverts_residues() {
        let basis = RnsBasis::new(&ntt_primes(60, 64, 4, &[]));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let half: BigInt = BigInt::from(basis.product().clone()) / 2u32;
        for _ in 0..200 {
            let x = random_centered(&mut rng, &half);
            let r = basis.residues(&x);
            assert_eq!(basis.compose_centered(&r), x);
        }
    }

    #[test]
    fn converts_centred_representative() {
        let primes = ntt_primes(60, 64, 7, &[]);
        let from = RnsBasis::new(&primes[..3]);
        let to = RnsBasis::new(&primes[3..]);
        let conv = BaseConverter::new(&from, to.moduli());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        // stay clear of the +-q/2 band where the float quotient is ambiguous
        let q_int = BigInt::from(from.product().clone());
        let half: BigInt = &q_int / 2u32 - (&q_int >> 44);
        let n = 64;
        let xs: Vec<BigInt> = (0..n)
            .map(|i| match i {
                0 => BigInt::zero(),
                1 => half.clone(),
                2 => -half.clone(),
                3 => BigInt::from(-1),
                _ => random_centered(&mut rng, &half),
            })
            .collect();
        let mut input = vec![0u64; 3 * n];
        for (c, x) in xs.iter().enumerate() {
            for (i, r) in from.residues(x).into_iter().enumerate() {
                input[i * n + c] = r;
            }
        }
        let out = conv.convert(&input, n);
        for (c, x) in xs.iter().enumerate() {
            for (j, m) in to.moduli().iter().enumerate() {
                assert_eq!(out[j * n + c], residue(x, m.value()));
            }
        }
    }

    #[test]
    fn centre_mod_range() {
        let m = BigUint::from(10u32);
        assert_eq!(center_mod(&BigInt::from(5), &m), BigInt::from(5));
        assert_eq!(center_mod(&BigInt::from(6), &m), BigInt::from(-4));
        assert_eq!(center_mod(&BigInt::from(-5), &m), BigInt::from(5));
        assert_eq!(center_mod(&BigInt::from(-26), &m), BigInt::from(4));
    }
}
