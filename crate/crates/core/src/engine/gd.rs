//! Rescaled gradient descent and the van Wijngaarden combination.

use num_bigint::BigInt;
use num_traits::Pow;

use super::scaling::k_star;
use super::{par_collect, EncryptedCoefficients, EncryptedDataset, ScalingState};
use crate::backend::Backend;
use crate::depth::{binomial, Algorithm};
use crate::error::{ElsError, Result};
use crate::scalar::pow10;

/// carry * prev + X^T (w * y - X prev). Without a previous iterate the
/// zero terms are left out.
pub(crate) fn gradient_step<B: Backend>(
    b: &B,
    data: &EncryptedDataset<B::Scalar>,
    prev: Option<&[B::Scalar]>,
    carry: &BigInt,
    y_weight: &BigInt,
) -> Result<Vec<B::Scalar>> {
    let residual = par_collect(data.n(), |i| {
        let yw = b.plain_mul(&data.y[i], y_weight)?;
        match prev {
            None => Ok(yw),
            Some(beta) => b.sub(&yw, &b.dot(data.x.row(i), beta)?),
        }
    })?;
    par_collect(data.p(), |j| {
        let g = b.dot(data.column(j), &residual)?;
        match prev {
            None => Ok(g),
            Some(beta) => b.add(&b.plain_mul(&beta[j], carry)?, &g),
        }
    })
}

/// k-th iterate from the (k-1)-th, both at their gradient descent scales.
pub fn gd_step<B: Backend>(
    b: &B,
    data: &EncryptedDataset<B::Scalar>,
    prev: Option<&[B::Scalar]>,
    k: u32,
    phi: u32,
    nu: u64,
) -> Result<Vec<B::Scalar>> {
    if k == 0 || (k > 1 && prev.is_none()) {
        return Err(ElsError::InvalidPlan(format!("iteration {k} needs the previous iterate")));
    }
    let carry = pow10(2 * phi) * nu;
    let y_weight = pow10((2 * k - 1) * phi) * Pow::pow(BigInt::from(nu), k - 1);
    gradient_step(b, data, if k == 1 { None } else { prev }, &carry, &y_weight)
}

pub struct GdRun<S> {
    pub coeffs: EncryptedCoefficients<S>,
    pub trajectory: Vec<Vec<S>>,
}

pub fn run_gd<B: Backend>(
    b: &B,
    data: &EncryptedDataset<B::Scalar>,
    k_max: u32,
    phi: u32,
    nu: u64,
) -> Result<GdRun<B::Scalar>> {
    if k_max == 0 {
        return Err(ElsError::InvalidPlan("iteration count must be at least 1".into()));
    }
    let mut trajectory: Vec<Vec<B::Scalar>> = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let next = gd_step(b, data, trajectory.last().map(|v| v.as_slice()), k, phi, nu)?;
        log::debug!("gd iteration {k} done");
        trajectory.push(next);
    }
    Ok(GdRun {
        coeffs: EncryptedCoefficients {
            beta: trajectory.last().unwrap().clone(),
            scaling: ScalingState::new(Algorithm::Gd, k_max, phi, nu, data.p()),
            per_coordinate_scales: None,
        },
        trajectory,
    })
}

/// Binomially weighted sum of iterates k* ..= K after bringing each to the
/// scale of the K-th.
pub fn vwt_combine<B: Backend>(
    b: &B,
    trajectory: &[Vec<B::Scalar>],
    k_max: u32,
    phi: u32,
    nu: u64,
) -> Result<EncryptedCoefficients<B::Scalar>> {
    if k_max == 0 || trajectory.len() < k_max as usize {
        return Err(ElsError::InvalidPlan(format!(
            "combination over {k_max} iterates but {} were kept",
            trajectory.len()
        )));
    }
    let ks = k_star(k_max);
    let weights: Vec<(u32, BigInt)> = (ks..=k_max)
        .map(|k| {
            let rescale = pow10(2 * (k_max - k) * phi) * Pow::pow(BigInt::from(nu), k_max - k);
            (k, binomial((k_max - ks) as u64, (k - ks) as u64) * rescale)
        })
        .collect();
    let p = trajectory[0].len();
    let beta = par_collect(p, |j| {
        let terms: Vec<(&B::Scalar, BigInt)> = weights
            .iter()
            .map(|(k, w)| (&trajectory[*k as usize - 1][j], w.clone()))
            .collect();
        b.lin_comb(&terms)
    })?;
    Ok(EncryptedCoefficients {
        beta,
        scaling: ScalingState::new(Algorithm::GdVwt, k_max, phi, nu, p),
        per_coordinate_scales: None,
    })
}
