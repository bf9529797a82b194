//! From a plaintext bundle to decoded coefficients on any backend.

use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use super::DatasetBundle;
use crate::backend::Backend;
use crate::depth::{Algorithm, FitPlan};
use crate::encoding::{encode_matrix, encode_vector, EncodingConfig};
use crate::engine::{self, decode_coefficients, decode_values, encrypt_dataset, ridge_augment, FitOutput};
use crate::error::{ElsError, Result};
use crate::linalg::Matrix;
use crate::reference::{self, nu_for, StepRule};
use crate::scalar::{pow10, Scalar};

/// Design and response the circuit actually sees: ridge-augmented when
/// the plan carries a penalty.
pub fn fitted_design<T: Scalar>(bundle: &DatasetBundle<T>, alpha: f64) -> Result<(Matrix<T>, Vec<T>)> {
    if alpha > 0.0 {
        ridge_augment(&bundle.x, &bundle.y, alpha)
    } else {
        Ok((bundle.x.clone(), bundle.y.clone()))
    }
}

/// Plan for `bundle` with nu chosen by `rule` on the plaintext design.
pub fn plan_for<T: Scalar>(
    bundle: &DatasetBundle<T>,
    algorithm: Algorithm,
    k: u32,
    phi: u32,
    rule: StepRule,
    alpha: &str,
) -> Result<FitPlan> {
    let mut plan = FitPlan::new(algorithm, k, bundle.p(), bundle.n(), phi, 1);
    plan.alpha = alpha.to_string();
    plan.validate()?;
    let (x, y) = fitted_design(bundle, plan.alpha_f64())?;
    plan.nu = nu_for(rule, &x);
    let max_abs = x.data().iter().chain(&y).map(|v| v.to_f64_lossy().abs()).fold(0.0, f64::max);
    plan.input_bound = (max_abs.ceil() as u32).max(10);
    Ok(plan)
}

/// Encoded design and response, checked against the plan's input bound.
pub fn encode_bundle<T: Scalar>(bundle: &DatasetBundle<T>, plan: &FitPlan) -> Result<(Matrix<BigInt>, Vec<BigInt>)> {
    if bundle.p() != plan.p || bundle.n() != plan.n {
        return Err(ElsError::InvalidPlan(format!(
            "plan is for {}x{} data but the bundle is {}x{}",
            plan.n,
            plan.p,
            bundle.n(),
            bundle.p()
        )));
    }
    let (x, y) = fitted_design(bundle, plan.alpha_f64())?;
    let cfg = EncodingConfig::new(plan.phi);
    let (xe, ye) = (encode_matrix(&x, cfg)?, encode_vector(&y, cfg)?);
    let limit = pow10(plan.phi) * plan.input_bound;
    if let Some(v) = xe.data().iter().chain(&ye).find(|v| v.abs() > limit) {
        return Err(ElsError::Data(format!(
            "encoded value {v} exceeds the plan's input bound {}",
            plan.input_bound
        )));
    }
    Ok((xe, ye))
}

/// Output of one end-to-end fit.
#[derive(Clone, Debug)]
pub struct PipelineFit<S> {
    pub plan: FitPlan,
    pub output: FitOutput<S>,
    pub coefficients: Vec<f64>,
    pub predictions: Option<Vec<f64>>,
    pub depth: u32,
    pub ciphertext_bytes: usize,
    pub elapsed: Duration,
}

/// Encodes, encrypts, runs the plan and decodes. The backend must be able
/// to decrypt.
pub fn fit_on_backend<B: Backend, T: Scalar>(
    b: &B,
    bundle: &DatasetBundle<T>,
    plan: &FitPlan,
) -> Result<PipelineFit<B::Scalar>> {
    let start = Instant::now();
    let (x, y) = encode_bundle(bundle, plan)?;
    let data = encrypt_dataset(b, &x, &y)?;
    let output = engine::run_plan(b, &data, plan)?;
    let coefficients = decode_coefficients::<B, f64>(b, &output.coeffs)?;
    let predictions = match &output.predictions {
        Some((p, scale)) => Some(decode_values::<B, f64>(b, p, scale)?),
        None => None,
    };
    let ciphertext_bytes = output.coeffs.beta.iter().map(|s| b.scalar_to_bytes(s).len()).sum();
    Ok(PipelineFit {
        plan: plan.clone(),
        depth: engine::output_depth(b, &output),
        output,
        coefficients,
        predictions,
        ciphertext_bytes,
        elapsed: start.elapsed(),
    })
}

/// The unrescaled recursion the plan encrypts, run on the encoded data
/// mapped back by 10^-phi with step 1/nu. In exact rationals this equals
/// the decoded encrypted result.
pub fn reference_fit<T: Scalar, U: Scalar>(bundle: &DatasetBundle<U>, plan: &FitPlan) -> Result<Vec<T>> {
    let (xe, ye) = encode_bundle(bundle, plan)?;
    let f = BigRational::from_integer(pow10(plan.phi));
    let x = xe.map(|v| T::from_rational(&(BigRational::from_integer(v.clone()) / &f)));
    let y: Vec<T> = ye.iter().map(|v| T::from_rational(&(BigRational::from_integer(v.clone()) / &f))).collect();
    let delta = T::from_rational(&BigRational::new(1.into(), plan.nu.into()));
    Ok(match plan.algorithm {
        Algorithm::Gd => reference::float_gd(&x, &y, &delta, plan.k).pop().unwrap(),
        Algorithm::GdVwt => reference::float_vwt(&x, &y, &delta, plan.k),
        Algorithm::Cd => reference::float_cd(&x, &y, &delta, plan.k).pop().unwrap(),
        Algorithm::Nag => {
            let etas = (1..=plan.k)
                .map(|i| Ok(T::from_rational(&BigRational::new(plan.momentum.encoded(i, plan.phi)?, pow10(plan.phi)))))
                .collect::<Result<Vec<T>>>()?;
            reference::float_nag(&x, &y, &delta, plan.k, |i| etas[i as usize - 1].clone())
                .beta
                .pop()
                .unwrap()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::OracleBackend;
    use crate::data::{simulate, SimulationSpec};
    use crate::Rational;

    #[test]
    fn oracle_fit_matches_exact_reference() {
        let sim = simulate(&SimulationSpec::new(30, 3, 0.2, 5)).unwrap();
        for alg in Algorithm::ALL {
            let plan = plan_for(&sim.bundle, alg, 2, 2, StepRule::Optimal, "0").unwrap();
            let fit = fit_on_backend(&OracleBackend::default(), &sim.bundle, &plan).unwrap();
            let exact: Vec<Rational> = reference_fit(&sim.bundle, &plan).unwrap();
            for (a, b) in fit.coefficients.iter().zip(&exact) {
                assert!((a - b.to_f64_lossy()).abs() < 1e-12, "{alg}");
            }
            assert_eq!(fit.depth, plan.mmd());
        }
    }

    #[test]
    fn input_bound_guard() {
        let sim = simulate(&SimulationSpec::new(20, 2, 0.0, 1)).unwrap();
        let mut plan = plan_for(&sim.bundle, Algorithm::Gd, 1, 2, StepRule::Optimal, "0").unwrap();
        assert!(plan.input_bound >= 10);
        plan.input_bound = 1;
        assert!(matches!(encode_bundle(&sim.bundle, &plan), Err(ElsError::Data(_))));
    }

    #[test]
    fn ridge_plans_count_augmented_rows() {
        let sim = simulate(&SimulationSpec::new(20, 3, 0.0, 1)).unwrap();
        let plan = plan_for(&sim.bundle, Algorithm::Gd, 1, 2, StepRule::Optimal, "4").unwrap();
        assert_eq!(plan.rows(), 23);
        let (x, y) = encode_bundle(&sim.bundle, &plan).unwrap();
        assert_eq!((x.rows(), y.len()), (23, 23));
        // sqrt(4) = 2 on the diagonal of the extra rows
        assert_eq!(x.get(21, 1), &BigInt::from(200));
    }
}
