//! Error against OLS at a fixed multiplicative depth budget.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::pipeline::{fit_on_backend, plan_for, reference_fit};
use super::simulate::{simulate, SimulationSpec};
use super::DatasetBundle;
use crate::backend::OracleBackend;
use crate::depth::{k_for_mmd, Algorithm};
use crate::error::{ElsError, Result};
use crate::reference::{max_abs_diff, ols_closed_form, rmsd, StepRule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub algorithm: Algorithm,
    pub k: u32,
    pub mmd: u32,
    pub nu: u64,
    pub seed: u64,
    pub backend: String,
    /// Root mean squared deviation from the OLS coefficients.
    pub rmsd: f64,
    pub max_abs_error: f64,
    pub wall_ms: f64,
    pub ciphertext_bytes: usize,
}

/// Runs `algorithm` with the largest K fitting in `mmd` and scores it
/// against OLS. `encrypted` runs the integer circuit on the oracle
/// backend; otherwise the float recursion is used.
pub fn fixed_depth_record(
    bundle: &DatasetBundle<f64>,
    algorithm: Algorithm,
    mmd: u32,
    phi: u32,
    rule: StepRule,
    encrypted: bool,
    seed: u64,
) -> Result<BenchmarkRecord> {
    let ols = ols_closed_form(&bundle.x, &bundle.y)?;
    let k = k_for_mmd(algorithm, mmd, bundle.p());
    let start = Instant::now();
    let (beta, nu, bytes, backend) = if k == 0 {
        (vec![0.0; bundle.p()], 0, 0, "none".to_string())
    } else {
        let plan = plan_for(bundle, algorithm, k, phi, rule, "0")?;
        if encrypted {
            let fit = fit_on_backend(&OracleBackend::default(), bundle, &plan)?;
            (fit.coefficients, plan.nu, fit.ciphertext_bytes, "oracle".to_string())
        } else {
            (reference_fit::<f64, f64>(bundle, &plan)?, plan.nu, 0, "float".to_string())
        }
    };
    Ok(BenchmarkRecord {
        algorithm,
        k,
        mmd,
        nu,
        seed,
        backend,
        rmsd: rmsd(&beta, &ols),
        max_abs_error: max_abs_diff(&beta, &ols),
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
        ciphertext_bytes: bytes,
    })
}

/// Every algorithm at every depth budget on freshly simulated data per
/// seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedDepthSuite {
    pub algorithms: Vec<Algorithm>,
    pub mmds: Vec<u32>,
    pub data: SimulationSpec,
    pub seeds: Vec<u64>,
    pub phi: u32,
    pub rule: StepRule,
    pub encrypted: bool,
}

impl FixedDepthSuite {
    pub fn run(&self) -> Result<Vec<BenchmarkRecord>> {
        let mut out = Vec::new();
        for &seed in &self.seeds {
            let spec = SimulationSpec {
                seed,
                ..self.data.clone()
            };
            let bundle = simulate(&spec)?.bundle;
            for &mmd in &self.mmds {
                for &alg in &self.algorithms {
                    out.push(fixed_depth_record(&bundle, alg, mmd, self.phi, self.rule, self.encrypted, seed)?);
                }
            }
        }
        Ok(out)
    }
}

/// Plot-ready CSV, one row per record.
pub fn write_csv<W: Write>(records: &[BenchmarkRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| ElsError::Format(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_budget_fixes_k() {
        let sim = simulate(&SimulationSpec::new(40, 5, 0.3, 1)).unwrap();
        let ks: Vec<u32> = [Algorithm::Gd, Algorithm::Nag, Algorithm::GdVwt, Algorithm::Cd]
            .iter()
            .map(|&a| fixed_depth_record(&sim.bundle, a, 12, 2, StepRule::Optimal, false, 1).unwrap().k)
            .collect();
        assert_eq!(ks, vec![6, 4, 5, 1]);
        let zero = fixed_depth_record(&sim.bundle, Algorithm::Cd, 8, 2, StepRule::Optimal, false, 1).unwrap();
        assert_eq!(zero.k, 0);
        assert!(zero.rmsd > 0.0);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let suite = FixedDepthSuite {
            algorithms: vec![Algorithm::Gd, Algorithm::Cd],
            mmds: vec![4],
            data: SimulationSpec::new(30, 2, 0.0, 0),
            seeds: vec![1, 2],
            phi: 2,
            rule: StepRule::Optimal,
            encrypted: true,
        };
        let recs = suite.run().unwrap();
        assert_eq!(recs.len(), 4);
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("algorithm,k,mmd,nu,seed,backend,rmsd"));
        assert_eq!(text.lines().count(), 5);
    }
}
