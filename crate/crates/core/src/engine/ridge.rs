//! Ridge penalty by data augmentation.

use crate::error::{ElsError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Appends sqrt(alpha) I below X and P zeros below y.
pub fn ridge_augment<T: Scalar>(x: &Matrix<T>, y: &[T], alpha: f64) -> Result<(Matrix<T>, Vec<T>)> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(ElsError::InvalidPlan(format!("ridge penalty {alpha} must be non-negative")));
    }
    let p = x.cols();
    let root = T::from_f64(alpha.sqrt())
        .ok_or_else(|| ElsError::InvalidPlan(format!("cannot represent sqrt({alpha})")))?;
    let block = Matrix::from_fn(p, p, |i, j| if i == j { root.clone() } else { T::zero() });
    let mut ya = y.to_vec();
    ya.extend((0..p).map(|_| T::zero()));
    Ok((x.vstack(&block), ya))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn augmentation_shape() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let (xa, ya) = ridge_augment(&x, &[1.0, 2.0, 3.0], 4.0).unwrap();
        assert_eq!((xa.rows(), xa.cols(), ya.len()), (5, 2, 5));
        assert_eq!(xa.row(3), &[2.0, 0.0]);
        assert_eq!(xa.row(4), &[0.0, 2.0]);
        assert_eq!(&ya[3..], &[0.0, 0.0]);
        let (z, _) = ridge_augment(&x, &[1.0, 2.0, 3.0], 0.0).unwrap();
        assert!(z.row(3).iter().chain(z.row(4)).all(|&v| v == 0.0));
        assert!(ridge_augment(&x, &[1.0, 2.0, 3.0], -1.0).is_err());
    }
}
