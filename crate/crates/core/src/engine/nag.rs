//! Rescaled Nesterov accelerated gradient.

use num_bigint::BigInt;
use num_traits::{Pow, Zero};

use super::gd::gradient_step;
use super::{par_collect, EncryptedCoefficients, EncryptedDataset, ScalingState};
use crate::backend::Backend;
use crate::depth::{Algorithm, FitPlan, Momentum};
use crate::error::{ElsError, Result};
use crate::scalar::pow10;

pub struct NagState<S> {
    pub beta: Vec<S>,
    pub s: Vec<S>,
}

/// One accelerated iteration: the gradient half-step s^k from beta^(k-1),
/// then beta^k = (10^phi + eta) s^k - 10^(3 phi) nu eta s^(k-1), with eta
/// the encoded momentum.
pub fn nag_step<B: Backend>(
    b: &B,
    data: &EncryptedDataset<B::Scalar>,
    prev: Option<&NagState<B::Scalar>>,
    k: u32,
    phi: u32,
    nu: u64,
    eta: &BigInt,
) -> Result<NagState<B::Scalar>> {
    if k == 0 || (k > 1 && prev.is_none()) {
        return Err(ElsError::InvalidPlan(format!("iteration {k} needs the previous state")));
    }
    let prev = if k == 1 { None } else { prev };
    let carry = pow10(2 * phi) * nu;
    let y_weight = pow10((3 * k - 2) * phi) * Pow::pow(BigInt::from(nu), k - 1);
    let s = gradient_step(b, data, prev.map(|st| st.beta.as_slice()), &carry, &y_weight)?;
    let w_new = pow10(phi) + eta;
    let w_old = -(pow10(3 * phi) * nu * eta);
    let beta = par_collect(s.len(), |j| match prev {
        Some(st) if !w_old.is_zero() => b.lin_comb(&[(&s[j], w_new.clone()), (&st.s[j], w_old.clone())]),
        _ => b.plain_mul(&s[j], &w_new),
    })?;
    Ok(NagState { beta, s })
}

pub struct NagRun<S> {
    pub coeffs: EncryptedCoefficients<S>,
    pub trajectory: Vec<Vec<S>>,
    pub momentum: Vec<Vec<S>>,
}

pub fn run_nag<B: Backend>(
    b: &B,
    data: &EncryptedDataset<B::Scalar>,
    plan: &FitPlan,
) -> Result<NagRun<B::Scalar>> {
    run_nag_with(b, data, plan.k, plan.phi, plan.nu, &plan.momentum)
}

pub fn run_nag_with<B: Backend>(
    b: &B,
    data: &EncryptedDataset<B::Scalar>,
    k_max: u32,
    phi: u32,
    nu: u64,
    momentum: &Momentum,
) -> Result<NagRun<B::Scalar>> {
    if k_max == 0 {
        return Err(ElsError::InvalidPlan("iteration count must be at least 1".into()));
    }
    let mut state: Option<NagState<B::Scalar>> = None;
    let mut trajectory = Vec::with_capacity(k_max as usize);
    let mut half_steps = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        let eta = momentum.encoded(k, phi)?;
        let next = nag_step(b, data, state.as_ref(), k, phi, nu, &eta)?;
        trajectory.push(next.beta.clone());
        half_steps.push(next.s.clone());
        state = Some(next);
    }
    Ok(NagRun {
        coeffs: EncryptedCoefficients {
            beta: trajectory.last().unwrap().clone(),
            scaling: ScalingState::new(Algorithm::Nag, k_max, phi, nu, data.p()),
            per_coordinate_scales: None,
        },
        trajectory,
        momentum: half_steps,
    })
}
