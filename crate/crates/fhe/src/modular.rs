//! Word-sized modular arithmetic for primes below 2^61.

/// A word-sized odd modulus with precomputed Barrett constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modulus {
    value: u64,
    // floor(2^128 / value), low and high words
    ratio: [u64; 2],
}

impl Modulus {
    pub fn new(value: u64) -> Modulus {
        assert!(value >= 2 && value < (1 << 61), "modulus out of range");
        let full = u128::MAX / value as u128;
        // u128::MAX / v == floor(2^128 / v) unless v divides 2^128, impossible for odd v > 1
        let ratio = [full as u64, (full >> 64) as u64];
        Modulus { value, ratio }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    /// Reduces a 128-bit value.
    #[inline]
    pub fn reduce_u128(&self, x: u128) -> u64 {
        let x0 = x as u64;
        let x1 = (x >> 64) as u64;
        let carry = ((x0 as u128 * self.ratio[0] as u128) >> 64) as u64;
        let tmp2 = x0 as u128 * self.ratio[1] as u128;
        let tmp1 = tmp2 + carry as u128;
        let lo1 = tmp1 as u64;
        let hi1 = (tmp1 >> 64) as u64;
        let tmp3 = x1 as u128 * self.ratio[0] as u128;
        let (_, c) = lo1.overflowing_add(tmp3 as u64);
        let quot = x1
            .wrapping_mul(self.ratio[1])
            .wrapping_add(hi1)
            .wrapping_add((tmp3 >> 64) as u64)
            .wrapping_add(c as u64);
        let mut r = x0.wrapping_sub(quot.wrapping_mul(self.value));
        if r >= self.value {
            r -= self.value;
        }
        r
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        if x >= self.value {
            self.reduce_u128(x as u128)
        } else {
            x
        }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.value {
            s - self.value
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.value - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.value - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce_u128(a as u128 * b as u128)
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1 % self.value;
        base = self.reduce(base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse for prime moduli (Fermat).
    pub fn inv(&self, a: u64) -> Option<u64> {
        let a = self.reduce(a);
        if a == 0 {
            return None;
        }
        Some(self.pow(a, self.value - 2))
    }

    /// Maps a signed value to its residue.
    #[inline]
    pub fn from_i64(&self, x: i64) -> u64 {
        if x >= 0 {
            self.reduce(x as u64)
        } else {
            self.neg(self.reduce(x.unsigned_abs()))
        }
    }

    /// Precomputed operand for [`Modulus::mul_shoup`].
    #[inline]
    pub fn shoup(&self, w: u64) -> u64 {
        (((w as u128) << 64) / self.value as u128) as u64
    }

    /// a * w mod p, given `w_shoup = self.shoup(w)` and `w < p`.
    #[inline]
    pub fn mul_shoup(&self, a: u64, w: u64, w_shoup: u64) -> u64 {
        let q = ((a as u128 * w_shoup as u128) >> 64) as u64;
        let r = a.wrapping_mul(w).wrapping_sub(q.wrapping_mul(self.value));
        if r >= self.value {
            r - self.value
        } else {
            r
        }
    }
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, b, m);
        }
        b = mul_mod_u64(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &p in &SMALL {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &SMALL {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Returns `count` distinct primes p < 2^bits with p = 1 mod `step`, in
/// descending order, skipping anything listed in `exclude`.
pub fn ntt_primes(bits: u32, step: u64, count: usize, exclude: &[u64]) -> Vec<u64> {
    assert!((2..=61).contains(&bits));
    let mut out = Vec::with_capacity(count);
    let top = 1u64 << bits;
    let mut candidate = (top - 1) / step * step + 1;
    if candidate >= top {
        candidate -= step;
    }
    while out.len() < count {
        assert!(candidate > step, "ran out of NTT-friendly primes");
        if is_prime(candidate) && !exclude.contains(&candidate) {
            out.push(candidate);
        }
        candidate -= step;
    }
    out
}

/// Smallest primitive `order`-th root of unity mod p (`order` a power of two
/// dividing p - 1).
pub fn primitive_root_of_unity(m: &Modulus, order: u64) -> Option<u64> {
    let p = m.value();
    if order == 0 || (p - 1) % order != 0 {
        return None;
    }
    let cofactor = (p - 1) / order;
    for g in 2..p {
        let r = m.pow(g, cofactor);
        if m.pow(r, order / 2) == p - 1 {
            return Some(r);
        }
    }
    None
}
