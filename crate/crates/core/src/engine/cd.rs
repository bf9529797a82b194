//! Rescaled cyclic coordinate descent.
//!
//! After the u-th update overall, the updated coordinate sits at scale
//! S_u = 10^((2u+1) phi) nu^u. Update u works at residual scale
//! 10^phi S_(u-1), lifting older coordinates by S_(u-1) / S_i first.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::scaling::gd_scale;
use super::{par_collect, EncryptedCoefficients, EncryptedDataset, ScalingState};
use crate::backend::Backend;
use crate::depth::Algorithm;
use crate::error::{ElsError, Result};
use crate::scalar::pow10;

#[derive(Clone, Debug)]
pub struct CdState<S> {
    pub beta: Vec<Option<S>>,
    pub scales: Vec<Option<BigInt>>,
    pub updates: u32,
}

impl<S> CdState<S> {
    pub fn new(p: usize) -> CdState<S> {
        CdState {
            beta: (0..p).map(|_| None).collect(),
            scales: vec![None; p],
            updates: 0,
        }
    }
}

fn exact_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    debug_assert!(r.is_zero(), "scales are nested");
    q
}

/// Applies update number `state.updates + 1` to coordinate `j`.
pub fn cd_step<B: Backend>(
    b: &B,
    data: &EncryptedDataset<B::Scalar>,
    state: &mut CdState<B::Scalar>,
    j: usize,
    phi: u32,
    nu: u64,
) -> Result<()> {
    if j >= data.p() {
        return Err(ElsError::InvalidPlan(format!("coordinate {j} out of range")));
    }
    let u = state.updates + 1;
    let m = gd_scale(phi, nu, u - 1);
    let updated: Vec<usize> = (0..data.p()).filter(|&i| state.beta[i].is_some()).collect();
    let lifted = par_collect(updated.len(), |t| {
        let i = updated[t];
        let beta = state.beta[i].as_ref().unwrap();
        let c = exact_div(&m, state.scales[i].as_ref().unwrap());
        if c.is_one() {
            Ok(beta.clone())
        } else {
            b.plain_mul(beta, &c)
        }
    })?;
    let residual = par_collect(data.n(), |r| {
        let yw = b.plain_mul(&data.y[r], &m)?;
        if updated.is_empty() {
            return Ok(yw);
        }
        let row = data.x.row(r);
        let fitted = if updated.len() == data.p() {
            b.dot(row, &lifted)?
        } else {
            let xs: Vec<B::Scalar> = updated.iter().map(|&i| row[i].clone()).collect();
            b.dot(&xs, &lifted)?
        };
        b.sub(&yw, &fitted)
    })?;
    let g = b.dot(data.column(j), &residual)?;
    let next = match (&state.beta[j], &state.scales[j]) {
        (Some(old), Some(s)) => {
            let carry = pow10(2 * phi) * nu * exact_div(&m, s);
            b.add(&b.plain_mul(old, &carry)?, &g)?
        }
        _ => g,
    };
    state.beta[j] = Some(next);
    state.scales[j] = Some(gd_scale(phi, nu, u));
    state.updates = u;
    Ok(())
}

pub struct CdRun<S> {
    pub coeffs: EncryptedCoefficients<S>,
    /// State after each full sweep over the coordinates.
    pub sweeps: Vec<Vec<S>>,
}

/// Scale of coordinate `j` after `sweep` full sweeps over `p` coordinates.
pub fn cd_coordinate_scale(phi: u32, nu: u64, sweep: u32, j: usize, p: usize) -> BigInt {
    gd_scale(phi, nu, (sweep - 1) * p as u32 + j as u32 + 1)
}

/// K sweeps of the cyclic schedule 0, 1, ..., P-1.
pub fn run_cd<B: Backend>(
    b: &B,
    data: &EncryptedDataset<B::Scalar>,
    k_max: u32,
    phi: u32,
    nu: u64,
) -> Result<CdRun<B::Scalar>> {
    if k_max == 0 {
        return Err(ElsError::InvalidPlan("iteration count must be at least 1".into()));
    }
    let p = data.p();
    let mut state = CdState::new(p);
    let mut sweeps = Vec::with_capacity(k_max as usize);
    for _ in 0..k_max {
        for j in 0..p {
            cd_step(b, data, &mut state, j, phi, nu)?;
        }
        sweeps.push(state.beta.iter().map(|s| s.clone().unwrap()).collect());
    }
    let scales: Vec<BigInt> = state.scales.iter().map(|s| s.clone().unwrap()).collect();
    Ok(CdRun {
        coeffs: EncryptedCoefficients {
            beta: sweeps.last().cloned().unwrap(),
            scaling: ScalingState::new(Algorithm::Cd, k_max, phi, nu, p),
            per_coordinate_scales: Some(scales),
        },
        sweeps,
    })
}

/// Lifts every coordinate to the largest scale. Coordinates already there
/// are left alone, so the deepest one keeps its depth.
pub fn unify_cd_scaling<B: Backend>(
    b: &B,
    coeffs: &EncryptedCoefficients<B::Scalar>,
) -> Result<EncryptedCoefficients<B::Scalar>> {
    let Some(scales) = &coeffs.per_coordinate_scales else {
        return Ok(coeffs.clone());
    };
    let top = scales.iter().max().cloned().unwrap_or_else(BigInt::one);
    let beta = par_collect(coeffs.beta.len(), |j| {
        let c = exact_div(&top, &scales[j]);
        if c.is_one() {
            Ok(coeffs.beta[j].clone())
        } else {
            b.plain_mul(&coeffs.beta[j], &c)
        }
    })?;
    let mut scaling = coeffs.scaling.clone();
    scaling.scale = top;
    Ok(EncryptedCoefficients {
        beta,
        scaling,
        per_coordinate_scales: None,
    })
}
