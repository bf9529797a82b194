//! Negacyclic number theoretic transform over Z_p[x]/(x^d + 1).

use crate::modular::{primitive_root_of_unity, Modulus};

/// Precomputed twiddles for one prime and one ring degree.
#[derive(Clone, Debug)]
pub struct NttTable {
    modulus: Modulus,
    d: usize,
    // psi^bitrev(i) and psi^-bitrev(i), with Shoup companions
    roots: Vec<u64>,
    roots_shoup: Vec<u64>,
    inv_roots: Vec<u64>,
    inv_roots_shoup: Vec<u64>,
    inv_d: u64,
    inv_d_shoup: u64,
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

impl NttTable {
    /// Returns `None` when p is not 1 mod 2d.
    pub fn new(modulus: Modulus, d: usize) -> Option<NttTable> {
        assert!(d.is_power_of_two() && d >= 2);
        let psi = primitive_root_of_unity(&modulus, 2 * d as u64)?;
        let psi_inv = modulus.inv(psi)?;
        let bits = d.trailing_zeros();
        let mut roots = vec![0; d];
        let mut inv_roots = vec![0; d];
        let (mut pw, mut ipw) = (1u64, 1u64);
        for i in 0..d {
            let r = bit_reverse(i, bits);
            roots[r] = pw;
            inv_roots[r] = ipw;
            pw = modulus.mul(pw, psi);
            ipw = modulus.mul(ipw, psi_inv);
        }
        let roots_shoup = roots.iter().map(|&w| modulus.shoup(w)).collect();
        let inv_roots_shoup = inv_roots.iter().map(|&w| modulus.shoup(w)).collect();
        let inv_d = modulus.inv(d as u64)?;
        Some(NttTable {
            modulus,
            d,
            roots,
            roots_shoup,
            inv_roots,
            inv_roots_shoup,
            inv_d,
            inv_d_shoup: modulus.shoup(inv_d),
        })
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    /// In-place forward transform; output in bit-reversed order.
    pub fn forward(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.d);
        let m = &self.modulus;
        let mut t = self.d;
        let mut groups = 1;
        while groups < self.d {
            t >>= 1;
            for i in 0..groups {
                let w = self.roots[groups + i];
                let ws = self.roots_shoup[groups + i];
                let (lo, hi) = a[2 * i * t..2 * i * t + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = m.mul_shoup(*y, w, ws);
                    *x = m.add(u, v);
                    *y = m.sub(u, v);
                }
            }
            groups <<= 1;
        }
    }

    /// In-place inverse of [`NttTable::forward`].
    pub fn inverse(&self, a: &mut [u64]) {
        assert_eq!(a.len(), self.d);
        let m = &self.modulus;
        let mut t = 1;
        let mut groups = self.d;
        while groups > 1 {
            let half = groups >> 1;
            for i in 0..half {
                let w = self.inv_roots[half + i];
                let ws = self.inv_roots_shoup[half + i];
                let (lo, hi) = a[2 * i * t..2 * i * t + 2 * t].split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = *y;
                    *x = m.add(u, v);
                    *y = m.mul_shoup(m.sub(u, v), w, ws);
                }
            }
            t <<= 1;
            groups = half;
        }
        for x in a.iter_mut() {
            *x = m.mul_shoup(*x, self.inv_d, self.inv_d_shoup);
        }
    }

    /// Negacyclic product of two coefficient-form polynomials.
    pub fn multiply(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let mut fa = a.to_vec();
        let mut fb = b.to_vec();
        self.forward(&mut fa);
        self.forward(&mut fb);
        for (x, y) in fa.iter_mut().zip(&fb) {
            *x = self.modulus.mul(*x, *y);
        }
        self.inverse(&mut fa);
        fa
    }
}

/// Quadratic-time negacyclic product, used as a reference.
pub fn schoolbook_negacyclic(a: &[u64], b: &[u64], m: &Modulus) -> Vec<u64> {
    let d = a.len();
    assert_eq!(d, b.len());
    let mut out = vec![0u64; d];
    for i in 0..d {
        if a[i] == 0 {
            continue;
        }
        for j in 0..d {
            let prod = m.mul(a[i], b[j]);
            let k = i + j;
            if k < d {
                out[k] = m.add(out[k], prod);
            } else {
                out[k - d] = m.sub(out[k - d], prod);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modular::ntt_primes;
    use proptest::prelude::*;

    fn table(d: usize) -> NttTable {
        let p = ntt_primes(60, 2 * d as u64, 1, &[])[0];
        NttTable::new(Modulus::new(p), d).unwrap()
    }

    #[test]
    fn x_times_x_to_the_d_minus_one_wraps_to_minus_one() {
        let t = table(8);
        let p = t.modulus().value();
        let mut a = vec![0; 8];
        let mut b = vec![0; 8];
        a[1] = 1;
        b[7] = 1;
        let c = t.multiply(&a, &b);
        assert_eq!(c[0], p - 1);
        assert!(c[1..].iter().all(|&x| x == 0));
    }

    #[test]
    fn rejects_unfriendly_prime() {
        assert!(NttTable::new(Modulus::new(1_000_000_007), 1024).is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn matches_schoolbook(log_d in 1u32..8, seed in any::<u64>()) {
            let d = 1usize << log_d;
            let t = table(d);
            let p = t.modulus().value();
            let mut s = seed;
            let mut next = || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 3) % p
            };
            let a: Vec<u64> = (0..d).map(|_| next()).collect();
            let b: Vec<u64> = (0..d).map(|_| next()).collect();
            prop_assert_eq!(t.multiply(&a, &b), schoolbook_negacyclic(&a, &b, t.modulus()));
        }

        #[test]
        fn inverse_undoes_forward(seed in any::<u64>()) {
            let t = table(256);
            let p = t.modulus().value();
            let a: Vec<u64> = (0..256u64).map(|i| (seed ^ i.wrapping_mul(0x9E3779B97F4A7C15)) % p).collect();
            let mut b = a.clone();
            t.forward(&mut b);
            t.inverse(&mut b);
            prop_assert_eq!(a, b);
        }
    }
}
