//! Encrypted fitted values.

use num_bigint::BigInt;

use super::{par_collect, EncryptedCoefficients, EncryptedDataset};
use crate::backend::Backend;
use crate::error::{ElsError, Result};
use crate::scalar::pow10;

/// x^T beta for one encrypted covariate row, with its decode divisor
/// 10^phi times the coefficient scale.
pub fn predict<B: Backend>(
    b: &B,
    row: &[B::Scalar],
    coeffs: &EncryptedCoefficients<B::Scalar>,
) -> Result<(B::Scalar, BigInt)> {
    if coeffs.per_coordinate_scales.is_some() {
        return Err(ElsError::InvalidPlan(
            "coefficients carry different scales; unify them before predicting".into(),
        ));
    }
    let y = b.dot(row, &coeffs.beta)?;
    Ok((y, pow10(coeffs.scaling.phi) * &coeffs.scaling.scale))
}

pub fn predict_rows<B: Backend>(
    b: &B,
    data: &EncryptedDataset<B::Scalar>,
    rows: &[usize],
    coeffs: &EncryptedCoefficients<B::Scalar>,
) -> Result<(Vec<B::Scalar>, BigInt)> {
    let preds = par_collect(rows.len(), |i| predict(b, data.x.row(rows[i]), coeffs).map(|(y, _)| y))?;
    Ok((preds, pow10(coeffs.scaling.phi) * &coeffs.scaling.scale))
}
