//! Encrypted descent algorithms over any [`Backend`].

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::backend::{Backend, BoundBackend};
use crate::depth::{Algorithm, FitPlan, PlanBounds};
use crate::encoding::decode_rational;
use crate::error::{ElsError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

pub mod artifact;
pub mod cd;
pub mod gd;
pub mod nag;
pub mod predict;
pub mod ridge;
pub mod scaling;

pub use cd::{run_cd, unify_cd_scaling};
pub use gd::{gd_step, run_gd, vwt_combine};
pub use nag::{nag_step, run_nag};
pub use predict::{predict, predict_rows};
pub use ridge::ridge_augment;
pub use scaling::ScalingState;

/// Encrypted standardized design and centred response.
#[derive(Clone, Debug)]
pub struct EncryptedDataset<S> {
    pub x: Matrix<S>,
    pub y: Vec<S>,
    xt: Matrix<S>,
}

impl<S: Clone> EncryptedDataset<S> {
    pub fn new(x: Matrix<S>, y: Vec<S>) -> Result<EncryptedDataset<S>> {
        if x.rows() != y.len() {
            return Err(ElsError::Data(format!("{} design rows but {} responses", x.rows(), y.len())));
        }
        if x.rows() == 0 || x.cols() == 0 {
            return Err(ElsError::Data("empty dataset".into()));
        }
        let xt = x.transpose();
        Ok(EncryptedDataset { x, y, xt })
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn column(&self, j: usize) -> &[S] {
        self.xt.row(j)
    }
}

/// Encrypts an encoded dataset; nonces run over the cells in row-major
/// order, then the responses.
pub fn encrypt_dataset<B: Backend>(
    b: &B,
    x: &Matrix<BigInt>,
    y: &[BigInt],
) -> Result<EncryptedDataset<B::Scalar>> {
    let (n, p) = (x.rows(), x.cols());
    let cells: Vec<B::Scalar> = (0..n * p)
        .into_par_iter()
        .map(|c| b.encrypt(x.get(c / p, c % p), c as u64))
        .collect::<Result<_>>()?;
    let ys: Vec<B::Scalar> = (0..y.len())
        .into_par_iter()
        .map(|i| b.encrypt(&y[i], (n * p + i) as u64))
        .collect::<Result<_>>()?;
    EncryptedDataset::new(Matrix::new(n, p, cells), ys)
}

/// Final coefficients with their decode divisors.
#[derive(Clone, Debug)]
pub struct EncryptedCoefficients<S> {
    pub beta: Vec<S>,
    pub scaling: ScalingState,
    /// Coordinate descent leaves each coordinate at its own scale.
    pub per_coordinate_scales: Option<Vec<BigInt>>,
}

impl<S> EncryptedCoefficients<S> {
    pub fn scale_of(&self, j: usize) -> &BigInt {
        match &self.per_coordinate_scales {
            Some(s) => &s[j],
            None => &self.scaling.scale,
        }
    }
}

/// Everything a fit produces.
#[derive(Clone, Debug)]
pub struct FitOutput<S> {
    pub coeffs: EncryptedCoefficients<S>,
    /// `trajectory[k - 1]` is the k-th iterate (for CD, the state after
    /// the k-th full sweep).
    pub trajectory: Vec<Vec<S>>,
    /// Gradient half-steps of the accelerated method.
    pub momentum: Vec<Vec<S>>,
    /// Encrypted fitted values and their decode divisor.
    pub predictions: Option<(Vec<S>, BigInt)>,
}

/// Runs the planned algorithm. The plan must match the data shape.
pub fn run_plan<B: Backend>(
    b: &B,
    data: &EncryptedDataset<B::Scalar>,
    plan: &FitPlan,
) -> Result<FitOutput<B::Scalar>> {
    plan.validate()?;
    if data.p() != plan.p || data.n() != plan.rows() {
        return Err(ElsError::InvalidPlan(format!(
            "plan is for {}x{} data but the dataset is {}x{}",
            plan.rows(),
            plan.p,
            data.n(),
            data.p()
        )));
    }
    let mut out = match plan.algorithm {
        Algorithm::Gd => {
            let run = run_gd(b, data, plan.k, plan.phi, plan.nu)?;
            FitOutput {
                coeffs: run.coeffs,
                trajectory: run.trajectory,
                momentum: Vec::new(),
                predictions: None,
            }
        }
        Algorithm::GdVwt => {
            let run = run_gd(b, data, plan.k, plan.phi, plan.nu)?;
            let coeffs = vwt_combine(b, &run.trajectory, plan.k, plan.phi, plan.nu)?;
            FitOutput {
                coeffs,
                trajectory: run.trajectory,
                momentum: Vec::new(),
                predictions: None,
            }
        }
        Algorithm::Nag => {
            let run = run_nag(b, data, plan)?;
            FitOutput {
                coeffs: run.coeffs,
                trajectory: run.trajectory,
                momentum: run.momentum,
                predictions: None,
            }
        }
        Algorithm::Cd => {
            let run = run_cd(b, data, plan.k, plan.phi, plan.nu)?;
            FitOutput {
                coeffs: run.coeffs,
                trajectory: run.sweeps,
                momentum: Vec::new(),
                predictions: None,
            }
        }
    };
    if plan.include_prediction {
        if out.coeffs.per_coordinate_scales.is_some() {
            out.coeffs = unify_cd_scaling(b, &out.coeffs)?;
        }
        let rows: Vec<usize> = (0..plan.n).collect();
        out.predictions = Some(predict_rows(b, data, &rows, &out.coeffs)?);
    }
    Ok(out)
}

/// Deepest ciphertext among the outputs.
pub fn output_depth<B: Backend>(b: &B, out: &FitOutput<B::Scalar>) -> u32 {
    let coeff = out.coeffs.beta.iter().map(|s| b.depth(s)).max().unwrap_or(0);
    let pred = out
        .predictions
        .iter()
        .flat_map(|(p, _)| p.iter().map(|s| b.depth(s)))
        .max()
        .unwrap_or(0);
    coeff.max(pred)
}

/// Worst-case message polynomial of every decrypted output, found by
/// running the plan symbolically.
pub fn circuit_bounds(plan: &FitPlan) -> Result<PlanBounds> {
    let b = BoundBackend::for_inputs(plan.phi, plan.input_bound);
    let zeros = Matrix::new(plan.rows(), plan.p, vec![BigInt::zero(); plan.rows() * plan.p]);
    let data = encrypt_dataset(&b, &zeros, &vec![BigInt::zero(); plan.rows()])?;
    let out = run_plan(&b, &data, plan)?;
    let mut degree = 0;
    let mut coeff = BigInt::one();
    let preds = out.predictions.iter().flat_map(|(p, _)| p.iter());
    for s in out.coeffs.beta.iter().chain(preds) {
        degree = degree.max(s.degree);
        coeff = coeff.max(s.coeff.clone());
    }
    Ok(PlanBounds {
        degree,
        coeff,
        terms: plan.rows().max(plan.p),
    })
}

/// Decrypts and divides by the scale of each coordinate.
pub fn decode_coefficients<B: Backend, T: Scalar>(
    b: &B,
    coeffs: &EncryptedCoefficients<B::Scalar>,
) -> Result<Vec<T>> {
    coeffs
        .beta
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let v = b.decrypt(s)?;
            Ok(T::from_rational(&decode_rational(&v, coeffs.scale_of(j))?))
        })
        .collect()
}

pub fn decode_values<B: Backend, T: Scalar>(b: &B, values: &[B::Scalar], scale: &BigInt) -> Result<Vec<T>> {
    values
        .iter()
        .map(|s| Ok(T::from_rational(&decode_rational(&b.decrypt(s)?, scale)?)))
        .collect()
}

pub(crate) fn par_collect<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    (0..n).into_par_iter().map(f).collect()
}
