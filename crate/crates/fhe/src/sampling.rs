//! Seeded samplers for keys, masks and errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// A deterministic stream derived from a domain label and a caller seed.
pub struct Sampler {
    rng: ChaCha20Rng,
}

impl Sampler {
    pub fn new(domain: &[u8], seed: &[u8]) -> Sampler {
        let mut h = Sha256::new();
        h.update((domain.len() as u64).to_le_bytes());
        h.update(domain);
        h.update(seed);
        let digest: [u8; 32] = h.finalize().into();
        Sampler {
            rng: ChaCha20Rng::from_seed(digest),
        }
    }

    /// Uniform coefficients in {-1, 0, 1}.
    pub fn ternary(&mut self, n: usize) -> Vec<i64> {
        (0..n).map(|_| self.rng.random_range(-1i64..=1)).collect()
    }

    /// Centred binomial with `k` coin pairs, variance k/2.
    pub fn centered_binomial(&mut self, n: usize, k: u32) -> Vec<i64> {
        (0..n)
            .map(|_| {
                let mut acc = 0i64;
                let mut left = k;
                while left > 0 {
                    let take = left.min(32);
                    let mask = if take == 32 { u32::MAX } else { (1u32 << take) - 1 };
                    let a = self.rng.random::<u32>() & mask;
                    let b = self.rng.random::<u32>() & mask;
                    acc += a.count_ones() as i64 - b.count_ones() as i64;
                    left -= take;
                }
                acc
            })
            .collect()
    }

    /// Error polynomial whose standard deviation approximates `sigma`.
    pub fn error(&mut self, n: usize, sigma: f64) -> Vec<i64> {
        let k = binomial_width(sigma);
        self.centered_binomial(n, k)
    }

    pub fn uniform(&mut self, n: usize, modulus: u64) -> Vec<u64> {
        (0..n).map(|_| self.rng.random_range(0..modulus)).collect()
    }
}

/// Number of coin pairs giving variance closest to sigma^2 (at least one).
pub fn binomial_width(sigma: f64) -> u32 {
    ((2.0 * sigma * sigma).round() as u32).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a = Sampler::new(b"x", b"seed").uniform(32, 1 << 40);
        let b = Sampler::new(b"x", b"seed").uniform(32, 1 << 40);
        let c = Sampler::new(b"y", b"seed").uniform(32, 1 << 40);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn binomial_moments() {
        let sigma = 3.2;
        assert_eq!(binomial_width(sigma), 20);
        let xs = Sampler::new(b"e", b"1").error(200_000, sigma);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<i64>() as f64 / n;
        let var = xs.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 0.05);
        assert!((var - 10.0).abs() < 0.2, "variance {var}");
        assert!(xs.iter().all(|x| x.abs() <= 20));
    }

    #[test]
    fn ternary_support() {
        let xs = Sampler::new(b"t", b"").ternary(3000);
        for v in -1..=1 {
            let c = xs.iter().filter(|&&x| x == v).count();
            assert!(c > 850 && c < 1150);
        }
    }
}
