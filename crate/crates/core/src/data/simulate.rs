//! Seeded synthetic data: equicorrelated Gaussian designs and a lagged
//! AR(2) series.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::DatasetBundle;
use crate::error::{ElsError, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n: usize,
    pub p: usize,
    /// Common pairwise correlation of the covariates.
    pub rho: f64,
    /// Noise standard deviation.
    pub sigma: f64,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn new(n: usize, p: usize, rho: f64, seed: u64) -> SimulationSpec {
        SimulationSpec {
            n,
            p,
            rho,
            sigma: 1.0,
            seed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Simulated {
    pub bundle: DatasetBundle<f64>,
    /// Coefficients used to draw y, in raw units.
    pub beta: Vec<f64>,
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// beta ~ N(0, I), rows of X ~ N(0, Sigma) with unit variances and common
/// correlation rho, y ~ N(X beta, sigma^2 I).
pub fn simulate(spec: &SimulationSpec) -> Result<Simulated> {
    if !(0.0..1.0).contains(&spec.rho) {
        return Err(ElsError::Data(format!("correlation {} outside [0, 1)", spec.rho)));
    }
    if !(spec.sigma >= 0.0) {
        return Err(ElsError::Data(format!("noise sd {} is negative", spec.sigma)));
    }
    let mut rng = rng(spec.seed);
    let beta: Vec<f64> = (0..spec.p).map(|_| StandardNormal.sample(&mut rng)).collect();
    // one shared factor per row gives every pair correlation rho
    let (a, b) = (spec.rho.sqrt(), (1.0 - spec.rho).sqrt());
    let mut cells = Vec::with_capacity(spec.n * spec.p);
    for _ in 0..spec.n {
        let shared: f64 = StandardNormal.sample(&mut rng);
        for _ in 0..spec.p {
            let own: f64 = StandardNormal.sample(&mut rng);
            cells.push(a * shared + b * own);
        }
    }
    let x = Matrix::new(spec.n, spec.p, cells);
    let fitted = x.mul_vec(&beta);
    let y: Vec<f64> = fitted
        .iter()
        .map(|f| {
            let e: f64 = StandardNormal.sample(&mut rng);
            f + spec.sigma * e
        })
        .collect();
    let names = (1..=spec.p).map(|j| format!("x{j}")).collect();
    Ok(Simulated {
        bundle: DatasetBundle::from_raw(names, "y".into(), x, y)?,
        beta,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ar2Spec {
    /// Number of regression rows.
    pub n: usize,
    pub a1: f64,
    pub a2: f64,
    pub sigma: f64,
    pub seed: u64,
}

impl Ar2Spec {
    pub fn mood(seed: u64) -> Ar2Spec {
        Ar2Spec {
            n: 28,
            a1: 0.3,
            a2: -0.2,
            sigma: 1.0,
            seed,
        }
    }
}

/// Series y_t = a1 y_(t-1) + a2 y_(t-2) + e_t; the design holds the two lags.
pub fn simulate_ar2(spec: &Ar2Spec) -> Result<DatasetBundle<f64>> {
    if spec.a2.abs() >= 1.0 || spec.a1.abs() >= 1.0 - spec.a2 {
        return Err(ElsError::Data(format!("AR(2) coefficients {}, {} are not stationary", spec.a1, spec.a2)));
    }
    const BURN_IN: usize = 100;
    let noise = Normal::new(0.0, spec.sigma).map_err(|e| ElsError::Data(e.to_string()))?;
    let mut rng = rng(spec.seed);
    let len = BURN_IN + spec.n + 2;
    let mut series = vec![0.0f64; len];
    for t in 2..len {
        series[t] = spec.a1 * series[t - 1] + spec.a2 * series[t - 2] + noise.sample(&mut rng);
    }
    let s = &series[BURN_IN..];
    let x = Matrix::from_fn(spec.n, 2, |i, j| s[i + 1 - j]);
    let y = (0..spec.n).map(|i| s[i + 2]).collect();
    DatasetBundle::from_raw(vec!["lag1".into(), "lag2".into()], "y".into(), x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_offdiag_corr(x: &Matrix<f64>) -> f64 {
        let n = x.rows() as f64;
        let p = x.cols();
        let mut total = 0.0;
        for a in 0..p {
            for b in 0..a {
                let (ca, cb) = (x.column(a), x.column(b));
                let ma = ca.iter().sum::<f64>() / n;
                let mb = cb.iter().sum::<f64>() / n;
                let cov: f64 = ca.iter().zip(&cb).map(|(u, v)| (u - ma) * (v - mb)).sum();
                let va: f64 = ca.iter().map(|u| (u - ma).powi(2)).sum();
                let vb: f64 = cb.iter().map(|v| (v - mb).powi(2)).sum();
                total += cov / (va * vb).sqrt();
            }
        }
        total / (p * (p - 1) / 2) as f64
    }

    #[test]
    fn correlation_matches_rho() {
        let s = simulate(&SimulationSpec::new(1000, 5, 0.7, 1)).unwrap();
        let c = mean_offdiag_corr(&s.bundle.raw_x);
        assert!((0.6..=0.8).contains(&c), "{c}");
        let s = simulate(&SimulationSpec::new(1000, 5, 0.0, 2)).unwrap();
        assert!(mean_offdiag_corr(&s.bundle.raw_x).abs() < 0.1);
    }

    #[test]
    fn seeded_and_validated() {
        let a = simulate(&SimulationSpec::new(50, 3, 0.3, 9)).unwrap();
        let b = simulate(&SimulationSpec::new(50, 3, 0.3, 9)).unwrap();
        assert_eq!(a.bundle, b.bundle);
        assert_eq!(a.beta, b.beta);
        assert_ne!(a.bundle, simulate(&SimulationSpec::new(50, 3, 0.3, 10)).unwrap().bundle);
        assert!(simulate(&SimulationSpec::new(50, 3, 1.0, 9)).is_err());
        assert!(simulate(&SimulationSpec::new(50, 3, -0.1, 9)).is_err());
    }

    #[test]
    fn ar2_design_holds_lags() {
        let b = simulate_ar2(&Ar2Spec::mood(4)).unwrap();
        assert_eq!((b.n(), b.p()), (28, 2));
        for i in 1..28 {
            assert_eq!(b.raw_x.get(i, 0), &b.raw_y[i - 1]);
            assert_eq!(b.raw_x.get(i, 1), b.raw_x.get(i - 1, 0));
        }
        assert!(simulate_ar2(&Ar2Spec { a1: 1.5, ..Ar2Spec::mood(0) }).is_err());
    }
}
