//! Known integer factors between encrypted iterates and real coefficients.

use num_bigint::BigInt;
use num_traits::{One, Pow};
use serde::{Deserialize, Serialize};

use crate::depth::Algorithm;
use crate::scalar::pow10;

fn nu_pow(nu: u64, e: u32) -> BigInt {
    Pow::pow(BigInt::from(nu), e)
}

/// 10^((2k+1) phi) nu^k; also the scale after the k-th coordinate update.
pub fn gd_scale(phi: u32, nu: u64, k: u32) -> BigInt {
    pow10((2 * k + 1) * phi) * nu_pow(nu, k)
}

/// 10^((3k+1) phi) nu^k
pub fn nag_scale(phi: u32, nu: u64, k: u32) -> BigInt {
    pow10((3 * k + 1) * phi) * nu_pow(nu, k)
}

/// 10^(3k phi) nu^k, the scale of the gradient half-step.
pub fn nag_momentum_scale(phi: u32, nu: u64, k: u32) -> BigInt {
    pow10(3 * k * phi) * nu_pow(nu, k)
}

/// First iterate entering the van Wijngaarden combination.
pub fn k_star(k: u32) -> u32 {
    k / 3 + 1
}

/// 2^(K - k*) 10^((2K+1) phi) nu^K
pub fn vwt_scale(phi: u32, nu: u64, k: u32) -> BigInt {
    (BigInt::one() << (k - k_star(k))) * gd_scale(phi, nu, k)
}

/// Decode divisor of the final coefficients of a K-iteration run.
pub fn final_scale(algorithm: Algorithm, phi: u32, nu: u64, k: u32, p: usize) -> BigInt {
    match algorithm {
        Algorithm::Gd => gd_scale(phi, nu, k),
        Algorithm::Nag => nag_scale(phi, nu, k),
        Algorithm::GdVwt => vwt_scale(phi, nu, k),
        Algorithm::Cd => gd_scale(phi, nu, k * p as u32),
    }
}

/// Iteration-indexed scale bookkeeping for one fit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingState {
    pub algorithm: Algorithm,
    pub k: u32,
    pub phi: u32,
    pub nu: u64,
    #[serde(with = "crate::engine::artifact::big_string")]
    pub scale: BigInt,
}

impl ScalingState {
    pub fn new(algorithm: Algorithm, k: u32, phi: u32, nu: u64, p: usize) -> ScalingState {
        ScalingState {
            algorithm,
            k,
            phi,
            nu,
            scale: final_scale(algorithm, phi, nu, k, p),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_divisors() {
        assert_eq!(gd_scale(2, 4, 2), pow10(10) * 16);
        assert_eq!(nag_scale(2, 4, 2), pow10(14) * 16);
        assert_eq!(vwt_scale(2, 4, 4), pow10(18) * 256 * 4);
        assert_eq!(nag_momentum_scale(1, 3, 2), pow10(6) * 9);
        assert_eq!(gd_scale(3, 7, 0), pow10(3));
        assert_eq!(k_star(4), 2);
        assert_eq!(k_star(3), 2);
        assert_eq!(k_star(1), 1);
        assert_eq!(final_scale(Algorithm::Cd, 1, 2, 2, 3), gd_scale(1, 2, 6));
    }
}
