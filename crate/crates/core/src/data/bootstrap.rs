//! Bootstrap standard errors: resample rows in the clear, fit every
//! resample independently, take coordinatewise standard deviations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::DatasetBundle;
use crate::error::{ElsError, Result};
use crate::reference::ols_closed_form;

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapResult {
    pub se: Vec<f64>,
    pub estimates: Vec<Vec<f64>>,
    /// Resamples thrown away because their design was singular.
    pub redrawn: usize,
}

const MAX_REDRAWS: usize = 100;

fn draw(bundle: &DatasetBundle<f64>, rng: &mut ChaCha20Rng) -> Result<(DatasetBundle<f64>, usize)> {
    let n = bundle.n();
    for attempt in 0..MAX_REDRAWS {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let sample = bundle.resample(&idx);
        match ols_closed_form(&sample.x, &sample.y) {
            Ok(_) => return Ok((sample, attempt)),
            Err(ElsError::Singular(_)) => log::warn!("bootstrap resample is singular, redrawing"),
            Err(e) => return Err(e),
        }
    }
    Err(ElsError::Singular(format!("{MAX_REDRAWS} singular resamples in a row")))
}

/// `fit` maps a resampled bundle to coefficients; resample b draws from a
/// generator seeded by (seed, b), so results do not depend on scheduling.
pub fn bootstrap_se<F>(bundle: &DatasetBundle<f64>, resamples: usize, seed: u64, fit: F) -> Result<BootstrapResult>
where
    F: Fn(&DatasetBundle<f64>) -> Result<Vec<f64>> + Sync,
{
    if resamples < 2 {
        return Err(ElsError::Data("bootstrap needs at least 2 resamples".into()));
    }
    let runs: Vec<(Vec<f64>, usize)> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let (sample, redrawn) = draw(bundle, &mut rng)?;
            Ok((fit(&sample)?, redrawn))
        })
        .collect::<Result<_>>()?;
    let p = bundle.p();
    let b = resamples as f64;
    let se = (0..p)
        .map(|j| {
            let m = runs.iter().map(|(e, _)| e[j]).sum::<f64>() / b;
            let ss: f64 = runs.iter().map(|(e, _)| (e[j] - m).powi(2)).sum();
            (ss / (b - 1.0)).sqrt()
        })
        .collect();
    Ok(BootstrapResult {
        se,
        redrawn: runs.iter().map(|(_, r)| r).sum(),
        estimates: runs.into_iter().map(|(e, _)| e).collect(),
    })
}

/// sqrt of the diagonal of sigma^2 (X'X)^-1, with sigma^2 from the OLS
/// residuals on n - p degrees of freedom.
pub fn closed_form_se(bundle: &DatasetBundle<f64>) -> Result<Vec<f64>> {
    let beta = ols_closed_form(&bundle.x, &bundle.y)?;
    let fitted = bundle.x.mul_vec(&beta);
    let (n, p) = (bundle.n(), bundle.p());
    if n <= p {
        return Err(ElsError::Data("closed-form errors need n > p".into()));
    }
    let rss: f64 = bundle.y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
    let sigma2 = rss / (n - p) as f64;
    let inv = bundle
        .x
        .to_nalgebra()
        .tr_mul(&bundle.x.to_nalgebra())
        .try_inverse()
        .ok_or_else(|| ElsError::Singular("X'X".into()))?;
    Ok((0..p).map(|j| (sigma2 * inv[(j, j)]).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{simulate, SimulationSpec};
    use crate::linalg::Matrix;

    fn ols(b: &DatasetBundle<f64>) -> Result<Vec<f64>> {
        ols_closed_form(&b.x, &b.y)
    }

    #[test]
    fn noiseless_data_has_no_spread() {
        let mut spec = SimulationSpec::new(40, 2, 0.0, 3);
        spec.sigma = 0.0;
        let sim = simulate(&spec).unwrap();
        let r = bootstrap_se(&sim.bundle, 20, 1, ols).unwrap();
        assert!(r.se.iter().all(|s| *s < 1e-10), "{:?}", r.se);
    }

    #[test]
    fn seeded_repeat_is_identical() {
        let sim = simulate(&SimulationSpec::new(60, 2, 0.2, 8)).unwrap();
        let a = bootstrap_se(&sim.bundle, 10, 5, ols).unwrap();
        let b = bootstrap_se(&sim.bundle, 10, 5, ols).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.se, bootstrap_se(&sim.bundle, 10, 6, ols).unwrap().se);
        assert!(bootstrap_se(&sim.bundle, 1, 5, ols).is_err());
    }

    #[test]
    fn singular_resamples_are_redrawn() {
        // one informative row for the second column: many resamples miss it
        let x = Matrix::from_fn(6, 2, |i, j| if j == 0 { i as f64 - 2.5 } else if i == 0 { 1.0 } else { 0.0 });
        let y = vec![1.0, 0.5, -0.5, 0.2, 0.1, -1.3];
        let bundle = DatasetBundle::prepared(x, y).unwrap();
        let r = bootstrap_se(&bundle, 20, 2, ols).unwrap();
        assert!(r.redrawn > 0);
        assert_eq!(r.estimates.len(), 20);
    }
}
