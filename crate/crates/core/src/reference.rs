//! Cleartext oracles: closed-form solutions, spectral quantities, step
//! sizes and unrescaled versions of every descent recursion.
//!
//! The recursions are generic over [`Scalar`], so the same code runs in
//! f32, f64 or exact rationals. Closed forms and eigenvalues go through
//! f64 and nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::depth::binomial;
use crate::engine::scaling::k_star;
use crate::error::{ElsError, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

fn to_f64<T: Scalar>(x: &Matrix<T>) -> DMatrix<f64> {
    DMatrix::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j).to_f64_lossy())
}

fn vec_f64<T: Scalar>(v: &[T]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|z| z.to_f64_lossy()))
}

fn from_f64<T: Scalar>(v: &DVector<f64>) -> Vec<T> {
    v.iter().map(|&z| T::from_f64(z).expect("finite value")).collect()
}

fn check_shape<T: Clone>(x: &Matrix<T>, y: &[T]) -> Result<()> {
    if x.rows() != y.len() {
        return Err(ElsError::Data(format!("{} rows but {} responses", x.rows(), y.len())));
    }
    Ok(())
}

/// Least squares by SVD; refuses rank-deficient designs.
pub fn ols_closed_form<T: Scalar>(x: &Matrix<T>, y: &[T]) -> Result<Vec<T>> {
    check_shape(x, y)?;
    let xm = to_f64(x);
    let svd = xm.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if x.rows() < x.cols() || smax == 0.0 || smin <= smax * 1e-12 {
        return Err(ElsError::Singular(format!(
            "design has condition number {:.3e}",
            smax / smin
        )));
    }
    let beta = svd.solve(&vec_f64(y), 0.0).map_err(|e| ElsError::Singular(e.to_string()))?;
    Ok(from_f64(&beta))
}

/// (X'X + alpha I)^-1 X'y
pub fn ridge_closed_form<T: Scalar>(x: &Matrix<T>, y: &[T], alpha: f64) -> Result<Vec<T>> {
    check_shape(x, y)?;
    if !(alpha >= 0.0) {
        return Err(ElsError::Data(format!("ridge penalty {alpha} is negative")));
    }
    if alpha == 0.0 {
        return ols_closed_form(x, y);
    }
    let xm = to_f64(x);
    let a = xm.tr_mul(&xm) + DMatrix::identity(x.cols(), x.cols()) * alpha;
    let rhs = xm.tr_mul(&vec_f64(y));
    let chol = a.cholesky().ok_or_else(|| ElsError::Singular("ridge system".into()))?;
    Ok(from_f64(&chol.solve(&rhs)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralInfo {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub spectral_radius: f64,
    /// 2 / (lambda_max + lambda_min)
    pub optimal_step: f64,
    /// (lambda_max - lambda_min) / (lambda_max + lambda_min)
    pub optimal_radius: f64,
}

impl SpectralInfo {
    pub fn from_extremes(lambda_max: f64, lambda_min: f64) -> SpectralInfo {
        let sum = lambda_max + lambda_min;
        SpectralInfo {
            lambda_max,
            lambda_min,
            spectral_radius: lambda_max.abs().max(lambda_min.abs()),
            optimal_step: 2.0 / sum,
            optimal_radius: (lambda_max - lambda_min) / sum,
        }
    }
}

pub fn gram_f64<T: Scalar>(x: &Matrix<T>) -> DMatrix<f64> {
    let xm = to_f64(x);
    xm.tr_mul(&xm)
}

/// Extreme eigenvalues of X'X.
pub fn spectral_info<T: Scalar>(x: &Matrix<T>) -> SpectralInfo {
    let eig = SymmetricEigen::new(gram_f64(x));
    SpectralInfo::from_extremes(eig.eigenvalues.max(), eig.eigenvalues.min())
}

/// B(m) = ||(X'X)^m||_2^(1/m), an upper bound on the spectral radius that
/// tightens as m grows.
pub fn spectral_bound<T: Scalar>(x: &Matrix<T>, m: u32) -> f64 {
    assert!(m >= 1, "spectral_bound needs m >= 1");
    let a = gram_f64(x);
    // normalise first so high powers stay finite
    let c = a.norm();
    if c == 0.0 {
        return 0.0;
    }
    let an = &a / c;
    let mut p = an.clone();
    for _ in 1..m {
        p = &p * &an;
    }
    let norm = p.svd(false, false).singular_values.max();
    c * norm.powf(1.0 / m as f64)
}

/// How the integer inverse step nu is chosen from the plaintext design.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum StepRule {
    /// nu = ceil((lambda_max + lambda_min) / 2) = ceil(1 / delta*).
    Optimal,
    /// nu = floor(B(m) / 2) + 1, the smallest integer with 1/nu < 2/B(m).
    SpectralEdge { m: u32 },
    Explicit { nu: u64 },
}

pub fn nu_for<T: Scalar>(rule: StepRule, x: &Matrix<T>) -> u64 {
    match rule {
        StepRule::Optimal => {
            let s = spectral_info(x);
            ((s.lambda_max + s.lambda_min) / 2.0).ceil().max(1.0) as u64
        }
        StepRule::SpectralEdge { m } => (spectral_bound(x, m) / 2.0).floor() as u64 + 1,
        StepRule::Explicit { nu } => nu,
    }
}

fn gradient<T: Scalar>(x: &Matrix<T>, y: &[T], beta: &[T]) -> Vec<T> {
    let fitted = x.mul_vec(beta);
    let resid: Vec<T> = y.iter().zip(&fitted).map(|(a, b)| a.clone() - b.clone()).collect();
    x.tmul_vec(&resid)
}

fn axpy<T: Scalar>(a: &T, x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(xi, yi)| a.clone() * xi.clone() + yi.clone()).collect()
}

/// beta[k] = beta[k-1] + delta X'(y - X beta[k-1]); entry 0 is the zero start.
pub fn float_gd<T: Scalar>(x: &Matrix<T>, y: &[T], delta: &T, k: u32) -> Vec<Vec<T>> {
    let mut out = vec![vec![T::zero(); x.cols()]];
    for _ in 0..k {
        let prev = out.last().unwrap();
        let g = gradient(x, y, prev);
        out.push(axpy(delta, &g, prev));
    }
    out
}

/// Cyclic coordinate descent; entry s is the state after s full sweeps.
pub fn float_cd<T: Scalar>(x: &Matrix<T>, y: &[T], delta: &T, sweeps: u32) -> Vec<Vec<T>> {
    let p = x.cols();
    let mut beta = vec![T::zero(); p];
    let mut resid = y.to_vec();
    let mut out = vec![beta.clone()];
    for _ in 0..sweeps {
        for j in 0..p {
            let col = x.column(j);
            let step = delta.clone() * crate::linalg::dot(&col, &resid);
            for (r, c) in resid.iter_mut().zip(&col) {
                *r = r.clone() - step.clone() * c.clone();
            }
            beta[j] = beta[j].clone() + step;
        }
        out.push(beta.clone());
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct NagTrajectory<T> {
    /// beta[k], entry 0 the zero start.
    pub beta: Vec<Vec<T>>,
    /// Gradient half-steps s[k], entry 0 zero.
    pub s: Vec<Vec<T>>,
}

/// s[k] = beta[k-1] + delta X'(y - X beta[k-1]),
/// beta[k] = (1 + eta_k) s[k] - eta_k s[k-1].
pub fn float_nag<T: Scalar>(
    x: &Matrix<T>,
    y: &[T],
    delta: &T,
    k: u32,
    eta: impl Fn(u32) -> T,
) -> NagTrajectory<T> {
    let zero = vec![T::zero(); x.cols()];
    let mut t = NagTrajectory {
        beta: vec![zero.clone()],
        s: vec![zero],
    };
    for i in 1..=k {
        let prev = t.beta.last().unwrap();
        let s = axpy(delta, &gradient(x, y, prev), prev);
        let e = eta(i);
        let one_e = T::one() + e.clone();
        let beta = s
            .iter()
            .zip(t.s.last().unwrap())
            .map(|(a, b)| one_e.clone() * a.clone() - e.clone() * b.clone())
            .collect();
        t.s.push(s);
        t.beta.push(beta);
    }
    t
}

/// Repeated pairwise averaging of the partial sums beta[k*..=K]; returns
/// every row of the triangle, the last holding the single result.
pub fn vwt_triangle<T: Scalar>(gd_trajectory: &[Vec<T>], k: u32) -> Vec<Vec<Vec<T>>> {
    let two = T::from_int(2);
    let mut rows = vec![gd_trajectory[k_star(k) as usize..=k as usize].to_vec()];
    while rows.last().unwrap().len() > 1 {
        let prev = rows.last().unwrap();
        let next = prev
            .windows(2)
            .map(|w| {
                w[0].iter()
                    .zip(&w[1])
                    .map(|(a, b)| (a.clone() + b.clone()) / two.clone())
                    .collect()
            })
            .collect();
        rows.push(next);
    }
    rows
}

/// The triangle collapsed into binomial weights over 2^(K - k*).
pub fn vwt_closed_form<T: Scalar>(gd_trajectory: &[Vec<T>], k: u32) -> Vec<T> {
    let ks = k_star(k);
    let levels = k - ks;
    let denom = T::from_big(&(num_bigint::BigInt::from(1) << levels));
    let p = gd_trajectory[0].len();
    (0..p)
        .map(|j| {
            let sum = (ks..=k).fold(T::zero(), |acc, i| {
                let w = T::from_big(&binomial(levels as u64, (i - ks) as u64));
                acc + w * gd_trajectory[i as usize][j].clone()
            });
            sum / denom.clone()
        })
        .collect()
}

/// K steps of GD followed by the van Wijngaarden combination.
pub fn float_vwt<T: Scalar>(x: &Matrix<T>, y: &[T], delta: &T, k: u32) -> Vec<T> {
    let traj = float_gd(x, y, delta, k);
    vwt_triangle(&traj, k).pop().unwrap().pop().unwrap()
}

/// sum_{n=1..k} (-1)^(n+1) C(k, n) delta^n (X'X)^(n-1) X'y
pub fn oscillating_sum<T: Scalar>(x: &Matrix<T>, y: &[T], delta: &T, k: u32) -> Vec<T> {
    let gram = x.gram();
    let mut term = x.tmul_vec(y);
    let mut dpow = delta.clone();
    let mut out = vec![T::zero(); x.cols()];
    for n in 1..=k {
        let c = T::from_big(&binomial(k as u64, n as u64)) * dpow.clone();
        let c = if n % 2 == 1 { c } else { -c };
        out = axpy(&c, &term, &out);
        term = gram.mul_vec(&term);
        dpow = dpow * delta.clone();
    }
    out
}

/// trace(X (X'X + alpha I)^-1 X') = sum_i l_i / (l_i + alpha) over the
/// eigenvalues of X'X.
pub fn effective_df<T: Scalar>(x: &Matrix<T>, alpha: f64) -> f64 {
    let eig = SymmetricEigen::new(gram_f64(x));
    eig.eigenvalues
        .iter()
        .filter(|&&l| l > 1e-12 * eig.eigenvalues.max())
        .map(|&l| l / (l + alpha))
        .sum()
}

/// Root mean squared deviation between two coefficient vectors.
pub fn rmsd(a: &[f64], b: &[f64]) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (ss / a.len() as f64).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn norm2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Maps a matrix into exact rationals.
pub fn to_rational<T: Scalar>(x: &Matrix<T>) -> Result<Matrix<BigRational>> {
    x.try_map(|v| v.to_rational().ok_or_else(|| ElsError::Data("non-finite value".into())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    fn m(rows: &[&[f64]]) -> Matrix<f64> {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        max_abs_diff(a, b) < tol
    }

    // lambda_max by plain power iteration, independent of nalgebra
    fn power_iteration(x: &Matrix<f64>, iters: usize) -> f64 {
        let g = x.gram();
        let mut v = vec![1.0; x.cols()];
        let mut lambda = 0.0;
        for _ in 0..iters {
            let w = g.mul_vec(&v);
            lambda = norm2(&w) / norm2(&v);
            let n = norm2(&w);
            v = w.iter().map(|z| z / n).collect();
        }
        lambda
    }

    fn pseudo_random(n: usize, p: usize, seed: u64) -> (Matrix<f64>, Vec<f64>) {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let x = Matrix::from_fn(n, p, |_, _| next());
        let y = (0..n).map(|_| next()).collect();
        (x, y)
    }

    #[test]
    fn ols_examples() {
        let id = Matrix::<f64>::identity(3);
        let y = vec![1.5, -2.0, 7.0];
        assert!(close(&ols_closed_form(&id, &y).unwrap(), &y, 1e-12));
        let x = m(&[&[1.0], &[2.0], &[3.0]]);
        assert!(close(&ols_closed_form(&x, &[2.0, 4.0, 6.0]).unwrap(), &[2.0], 1e-12));
        let (x, y) = pseudo_random(100, 5, 3);
        let b = ols_closed_form(&x, &y).unwrap();
        let fitted = x.mul_vec(&b);
        let r: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
        assert!(norm2(&x.tmul_vec(&r)) < 1e-8);
        let dup = m(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]);
        assert!(matches!(ols_closed_form(&dup, &[1.0, 2.0, 3.0]), Err(ElsError::Singular(_))));
    }

    #[test]
    fn ridge_examples() {
        let (x, y) = pseudo_random(50, 4, 9);
        let ols = ols_closed_form(&x, &y).unwrap();
        assert!(close(&ridge_closed_form(&x, &y, 0.0).unwrap(), &ols, 1e-12));
        let big = ridge_closed_form(&x, &y, 1e12).unwrap();
        assert!(norm2(&big) < 1e-9);
        let (xa, ya) = crate::engine::ridge_augment(&x, &y, 3.0).unwrap();
        let aug = ols_closed_form(&xa, &ya).unwrap();
        assert!(close(&ridge_closed_form(&x, &y, 3.0).unwrap(), &aug, 1e-10));
        assert!(ridge_closed_form(&x, &y, -1.0).is_err());
    }

    #[test]
    fn spectral_examples() {
        let s = spectral_info(&Matrix::<f64>::identity(4));
        assert!((s.lambda_max - 1.0).abs() < 1e-12 && (s.lambda_min - 1.0).abs() < 1e-12);
        assert!((s.optimal_step - 1.0).abs() < 1e-12 && s.optimal_radius.abs() < 1e-12);
        // X = diag(3, 1) gives X'X = diag(9, 1)
        let s = spectral_info(&m(&[&[3.0, 0.0], &[0.0, 1.0]]));
        assert!((s.optimal_step - 0.2).abs() < 1e-12);
        assert!((s.optimal_radius - 0.8).abs() < 1e-12);
        for seed in 0..5 {
            let (x, _) = pseudo_random(100, 5, seed);
            let s = spectral_info(&x);
            assert!((s.lambda_max - power_iteration(&x, 2000)).abs() / s.lambda_max < 1e-6);
            assert!((spectral_bound(&x, 1) - s.spectral_radius).abs() / s.spectral_radius < 1e-10);
            for mm in [1, 2, 4, 8] {
                assert!(spectral_bound(&x, mm) >= s.spectral_radius * (1.0 - 1e-12));
            }
            assert!(spectral_bound(&x, 8) <= 1.05 * s.spectral_radius);
        }
    }

    #[test]
    fn step_rules() {
        let x = m(&[&[3.0, 0.0], &[0.0, 1.0]]);
        assert_eq!(nu_for(StepRule::Optimal, &x), 5);
        // B(m) = 9 exactly for a diagonal gram
        assert_eq!(nu_for(StepRule::SpectralEdge { m: 4 }, &x), 5);
        assert_eq!(nu_for(StepRule::Explicit { nu: 7 }, &x), 7);
        let x = m(&[&[2.5, 0.0], &[0.0, 2.0]]);
        assert_eq!(nu_for(StepRule::SpectralEdge { m: 1 }, &x), 4);
    }

    #[test]
    fn oscillating_sum_small_k() {
        let (x, y) = pseudo_random(20, 3, 5);
        let d = 0.01;
        let xty = x.tmul_vec(&y);
        let k1: Vec<f64> = xty.iter().map(|v| d * v).collect();
        assert!(close(&oscillating_sum(&x, &y, &d, 1), &k1, 1e-14));
        let gx = x.gram().mul_vec(&xty);
        let k2: Vec<f64> = xty.iter().zip(&gx).map(|(a, b)| 2.0 * d * a - d * d * b).collect();
        assert!(close(&oscillating_sum(&x, &y, &d, 2), &k2, 1e-14));
    }

    #[test]
    fn gd_matches_oscillating_sum_exactly_in_rationals() {
        let (xf, yf) = pseudo_random(8, 3, 11);
        let x = to_rational(&xf).unwrap();
        let y: Vec<BigRational> = yf.iter().map(|v| v.to_rational().unwrap()).collect();
        let d = BigRational::new(1.into(), 7.into());
        let traj = float_gd(&x, &y, &d, 5);
        assert!(traj[0].iter().all(|v| v.is_zero()));
        for k in 1..=5 {
            assert_eq!(traj[k as usize], oscillating_sum(&x, &y, &d, k));
        }
    }

    #[test]
    fn descent_variants_agree_where_they_should() {
        let (x, y) = pseudo_random(30, 1, 2);
        let d = 1.0 / spectral_info(&x).lambda_max;
        // one coordinate: CD is GD
        let gd = float_gd(&x, &y, &d, 4);
        let cd = float_cd(&x, &y, &d, 4);
        for k in 0..=4 {
            assert!(close(&gd[k], &cd[k], 1e-14));
        }
        let (x, y) = pseudo_random(30, 4, 2);
        let gd = float_gd(&x, &y, &d, 4);
        let nag = float_nag(&x, &y, &d, 4, |_| 0.0);
        assert_eq!(gd, nag.beta);
        assert_eq!(gd, nag.s);
        for k in 1..=6 {
            let traj = float_gd(&x, &y, &d, k);
            let tri = float_vwt(&x, &y, &d, k);
            assert!(close(&tri, &vwt_closed_form(&traj, k), 1e-12));
        }
    }

    #[test]
    fn vwt_triangle_shape() {
        let traj: Vec<Vec<BigRational>> = (0..=4).map(|k| vec![BigRational::from_integer(k.into())]).collect();
        let rows = vwt_triangle(&traj, 4);
        // k* = 2: rows of 3, 2, 1
        assert_eq!(rows.iter().map(|r| r.len()).collect::<Vec<_>>(), vec![3, 2, 1]);
        assert_eq!(rows[2][0][0], BigRational::from_integer(3.into()));
        assert_eq!(vwt_closed_form(&traj, 4)[0], BigRational::from_integer(3.into()));
        assert!(vwt_closed_form(&traj, 1)[0].is_one());
    }

    #[test]
    fn cd_reaches_ols() {
        let (x, y) = pseudo_random(60, 3, 4);
        let d = 1.0 / spectral_info(&x).lambda_max;
        let cd = float_cd(&x, &y, &d, 3000);
        assert!(close(cd.last().unwrap(), &ols_closed_form(&x, &y).unwrap(), 1e-8));
    }

    #[test]
    fn effective_df_decreases() {
        let (x, _) = pseudo_random(40, 4, 8);
        assert!((effective_df(&x, 0.0) - 4.0).abs() < 1e-10);
        let dfs: Vec<f64> = [0.0, 1.0, 15.0, 30.0, 1e12].iter().map(|&a| effective_df(&x, a)).collect();
        assert!(dfs.windows(2).all(|w| w[1] < w[0]));
        assert!(dfs[4] < 1e-9);
    }

    #[test]
    fn generic_over_f32() {
        let x = Matrix::from_rows(&[vec![1.0f32, 0.0], vec![0.0, 2.0], vec![1.0, 1.0]]);
        let y = vec![1.0f32, 2.0, 2.0];
        let b = ols_closed_form(&x, &y).unwrap();
        let traj = float_gd(&x, &y, &0.1f32, 400);
        assert!(traj[400].iter().zip(&b).all(|(a, c)| (a - c).abs() < 1e-4));
    }
}
