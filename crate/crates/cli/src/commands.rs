use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use els_core::backend::{Backend, FvBackend, OracleBackend};
use els_core::data::benchmark::{write_csv, FixedDepthSuite};
use els_core::data::bootstrap::closed_form_se;
use els_core::data::pipeline::{encode_bundle, fit_on_backend, plan_for, reference_fit};
use els_core::data::{bootstrap_se, ingest_csv, simulate, simulate_ar2, Ar2Spec, DatasetBundle, SimulationSpec};
use els_core::depth::{k_for_mmd, lemma3_bounds, log2_int};
use els_core::engine::artifact::{self, Artifact, ArtifactKind};
use els_core::engine::{circuit_bounds, decode_coefficients, decode_values, predict_rows, run_plan, unify_cd_scaling};
use els_core::{encrypt_dataset, select_params, Algorithm, BindingConstraint, ElsError, FitPlan};
use num_bigint::BigInt;

use crate::args::*;
use crate::keys;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

fn keys_dir(keys: &Option<PathBuf>) -> Result<&Path> {
    keys.as_deref()
        .ok_or_else(|| CliError::Usage("the fv backend needs --keys".into()))
}

fn read_plan(path: &Path) -> Result<FitPlan> {
    let text = std::fs::read_to_string(path)?;
    let plan: FitPlan = serde_json::from_str(&text)
        .map_err(|e| ElsError::InvalidPlan(format!("{}: {e}", path.display())))?;
    plan.validate()?;
    Ok(plan)
}

fn load_data(path: &Path, response: &str) -> Result<DatasetBundle<f64>> {
    Ok(ingest_csv(path, response)?)
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| CliError::Els(ElsError::Format(e.to_string())))
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Els(ElsError::Format(e.to_string()))
}

pub fn params(a: ParamsArgs) -> Result<()> {
    let data = load_data(&a.data.data, &a.data.response)?;
    let k = match (a.k, a.mmd) {
        (Some(k), _) => k,
        (None, Some(mmd)) => {
            let k = k_for_mmd(a.algorithm, mmd.saturating_sub(a.predict as u32), data.p());
            if k == 0 {
                return Err(CliError::Usage(format!(
                    "depth {mmd} leaves no room for one {} iteration with P = {}",
                    a.algorithm,
                    data.p()
                )));
            }
            k
        }
        (None, None) => return Err(CliError::Usage("give --k or --mmd".into())),
    };
    let mut plan = plan_for(&data, a.algorithm, k, a.phi, a.step, &a.alpha)?;
    plan.include_prediction = a.predict;
    plan.momentum = a.momentum;
    plan.validate()?;
    let sel = select_params(&plan)?;
    let json = serde_json::to_string_pretty(&plan).map_err(|e| ElsError::Format(e.to_string()))?;
    std::fs::write(&a.out, json + "\n")?;
    println!("plan           {} K={} N={} P={} phi={} nu={}", plan.algorithm, plan.k, plan.n, plan.p, plan.phi, plan.nu);
    if plan.is_ridge() {
        println!("ridge alpha    {} ({} augmented rows)", plan.alpha, plan.rows());
    }
    println!("{sel}");
    println!("wrote {}", a.out.display());
    Ok(())
}

pub fn keygen(a: KeygenArgs) -> Result<()> {
    let plan = read_plan(&a.plan)?;
    let sel = select_params(&plan)?;
    let ctx = els_fhe::FvContext::new(sel.params)?;
    let pair = els_fhe::keygen(&ctx, a.seed.as_bytes());
    keys::write_keys(&a.keys, &ctx, &pair)?;
    println!(
        "key {} (d = {}, log2 q = {:.1}) written to {}",
        els_core::backend::fv::public_key_id(&ctx, &pair.public),
        ctx.degree(),
        ctx.params().log2_q(),
        a.keys.display()
    );
    Ok(())
}

fn fv_evaluator(dir: &Path, plan: &FitPlan, seed: &[u8]) -> Result<FvBackend> {
    let b = keys::evaluator(dir, seed)?;
    keys::check_plan(b.context(), plan)?;
    Ok(b)
}

fn encrypt_with<B: Backend>(b: &B, plan: &FitPlan, data: &DatasetBundle<f64>, out: &Path) -> Result<()> {
    let (x, y) = encode_bundle(data, plan)?;
    let enc = encrypt_dataset(b, &x, &y)?;
    artifact::dataset_artifact(b, &enc, plan.phi).write(out)?;
    println!("encrypted {}x{} ({} backend, key {}) to {}", enc.n(), enc.p(), b.name(), b.key_id(), out.display());
    Ok(())
}

pub fn encrypt(a: EncryptArgs) -> Result<()> {
    let plan = read_plan(&a.plan)?;
    let data = load_data(&a.data.data, &a.data.response)?;
    match a.backend {
        BackendKind::Oracle => encrypt_with(&OracleBackend::default(), &plan, &data, &a.out),
        BackendKind::Fv => {
            let b = fv_evaluator(keys_dir(&a.keys)?, &plan, a.seed.as_bytes())?;
            encrypt_with(&b, &plan, &data, &a.out)
        }
    }
}

fn fit_with<B: Backend>(b: &B, plan: &FitPlan, a: &FitArgs) -> Result<()> {
    let input = Artifact::read(&a.input)?;
    let (data, phi) = artifact::load_dataset(b, &input)?;
    if phi != plan.phi {
        return Err(ElsError::InvalidPlan(format!("dataset was encoded with phi = {phi}, plan has {}", plan.phi)).into());
    }
    if a.predictions.is_some() && !plan.include_prediction {
        return Err(CliError::Usage("the plan reserves no level for predictions; rerun params with --predict".into()));
    }
    let out = run_plan(b, &data, plan)?;
    artifact::coefficients_artifact(b, &out.coeffs, plan).write(&a.out)?;
    println!("{} K={} fitted; coefficients written to {}", plan.algorithm, plan.k, a.out.display());
    if let (Some(path), Some((preds, scale))) = (&a.predictions, &out.predictions) {
        artifact::predictions_artifact(b, preds, scale, Some(plan), plan.phi).write(path)?;
        println!("{} encrypted fitted values written to {}", preds.len(), path.display());
    }
    Ok(())
}

pub fn fit(a: FitArgs) -> Result<()> {
    let plan = read_plan(&a.plan)?;
    match a.backend {
        BackendKind::Oracle => fit_with(&OracleBackend::default(), &plan, &a),
        BackendKind::Fv => {
            let b = fv_evaluator(keys_dir(&a.keys)?, &plan, b"fit")?;
            fit_with(&b, &plan, &a)
        }
    }
}

/// Per-ciphertext figures only the FV backend can report.
trait Inspect: Backend {
    fn inspect(&self, _: &[Self::Scalar]) -> Result<Option<(u64, BigInt, f64)>> {
        Ok(None)
    }
}

impl Inspect for OracleBackend {}

impl Inspect for FvBackend {
    /// Largest message degree, largest message coefficient, least noise budget.
    fn inspect(&self, xs: &[Self::Scalar]) -> Result<Option<(u64, BigInt, f64)>> {
        let mut degree = 0u64;
        let mut coeff = BigInt::from(0);
        let mut budget = f64::INFINITY;
        for s in xs {
            let poly = self.decrypt_poly(s)?;
            degree = degree.max(poly.len().saturating_sub(1) as u64);
            for c in poly {
                let c = if c < BigInt::from(0) { -c } else { c };
                if c > coeff {
                    coeff = c;
                }
            }
            budget = budget.min(self.noise_budget(s)?);
        }
        Ok(Some((degree, coeff, budget)))
    }
}

fn term_names(data: Option<&DatasetBundle<f64>>, p: usize) -> Vec<String> {
    match data {
        Some(d) => d.names.clone(),
        None => (1..=p).map(|j| format!("b{j}")).collect(),
    }
}

fn decrypt_with<B: Inspect>(b: &B, a: &DecryptArgs) -> Result<()> {
    let art = Artifact::read(&a.input)?;
    let data = match &a.data {
        Some(path) => Some(load_data(path, &a.response)?),
        None => None,
    };
    match art.meta.kind {
        ArtifactKind::Coefficients => {
            let plan = art
                .meta
                .plan
                .clone()
                .ok_or_else(|| ElsError::Format("coefficients without a plan".into()))?;
            let coeffs = artifact::load_coefficients(b, &art)?;
            let beta: Vec<f64> = decode_coefficients(b, &coeffs)?;
            if let Some(d) = &data {
                if d.p() != beta.len() {
                    return Err(ElsError::Data(format!("--data has {} covariates, the fit {}", d.p(), beta.len())).into());
                }
            }
            let names = term_names(data.as_ref(), beta.len());
            println!("{} K={} phi={} nu={}", plan.algorithm, plan.k, plan.phi, plan.nu);
            let raw = data.as_ref().map(|d| d.destandardize(&beta));
            println!("{:<12} {:>14} {:>14}", "term", "standardized", "raw");
            if let Some((intercept, _)) = &raw {
                println!("{:<12} {:>14} {:>14.6}", "(intercept)", "", intercept);
            }
            for (j, name) in names.iter().enumerate() {
                match &raw {
                    Some((_, slopes)) => println!("{name:<12} {:>14.6} {:>14.6}", beta[j], slopes[j]),
                    None => println!("{name:<12} {:>14.6}", beta[j]),
                }
            }
            let measured = art.meta.depths.iter().copied().max().unwrap_or(0);
            println!("depth          measured {measured}, planned {}", plan.mmd());
            if let Some((degree, coeff, budget)) = b.inspect(&coeffs.beta)? {
                let (bound_name, bd, bc) = if plan.algorithm == Algorithm::Gd {
                    let l3 = lemma3_bounds(&plan)?;
                    (
                        "growth bound",
                        *l3.degree_bound_per_iter.last().unwrap(),
                        l3.coeff_bound_per_iter.last().unwrap().clone(),
                    )
                } else {
                    let c = circuit_bounds(&plan)?;
                    ("circuit bound", c.degree, c.coeff)
                };
                println!("degree         observed {degree}, {bound_name} {bd}");
                println!("max coeff      observed 2^{:.1}, {bound_name} 2^{:.1}", log2_int(&coeff), log2_int(&bc));
                println!("noise budget   {budget:.1} bits");
            }
            if let Some(path) = &a.out {
                let mut w = csv_writer(path)?;
                w.write_record(["term", "standardized", "raw"]).map_err(csv_err)?;
                if let Some((intercept, _)) = &raw {
                    w.write_record(["(intercept)".to_string(), String::new(), intercept.to_string()])
                        .map_err(csv_err)?;
                }
                for (j, name) in names.iter().enumerate() {
                    let r = raw.as_ref().map(|(_, s)| s[j].to_string()).unwrap_or_default();
                    w.write_record([name.clone(), beta[j].to_string(), r]).map_err(csv_err)?;
                }
                w.flush()?;
            }
        }
        ArtifactKind::Predictions => {
            let (preds, scales) = artifact::load_predictions(b, &art)?;
            let mut values = Vec::with_capacity(preds.len());
            for (s, scale) in preds.iter().zip(&scales) {
                values.push(decode_values::<B, f64>(b, std::slice::from_ref(s), scale)?[0]);
            }
            let shift = data.as_ref().map(|d| d.y_mean).unwrap_or(0.0);
            let stdout = io::stdout();
            let mut out: Box<dyn Write> = match &a.out {
                Some(path) => Box::new(File::create(path)?),
                None => Box::new(stdout.lock()),
            };
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["row", "prediction"]).map_err(csv_err)?;
            for (i, v) in values.iter().enumerate() {
                w.write_record([i.to_string(), (v + shift).to_string()]).map_err(csv_err)?;
            }
            w.flush()?;
            if let Some((_, _, budget)) = b.inspect(&preds)? {
                eprintln!("noise budget {budget:.1} bits");
            }
        }
        ArtifactKind::Dataset => {
            return Err(CliError::Usage("datasets are decrypted by their owner; pass a fit or predictions".into()));
        }
    }
    Ok(())
}

pub fn decrypt(a: DecryptArgs) -> Result<()> {
    match a.backend {
        BackendKind::Oracle => decrypt_with(&OracleBackend::default(), &a),
        BackendKind::Fv => decrypt_with(&keys::decryptor(keys_dir(&a.keys)?)?, &a),
    }
}

fn predict_with<B: Backend>(b: &B, fit: &Artifact, a: &PredictArgs) -> Result<()> {
    let plan = fit
        .meta
        .plan
        .clone()
        .ok_or_else(|| ElsError::Format("coefficients without a plan".into()))?;
    if !plan.include_prediction {
        return Err(ElsError::Capacity {
            constraint: BindingConstraint::Depth,
            detail: format!("plan depth {} reserves no level for prediction", plan.mmd()),
        }
        .into());
    }
    let mut coeffs = artifact::load_coefficients(b, fit)?;
    if coeffs.per_coordinate_scales.is_some() {
        coeffs = unify_cd_scaling(b, &coeffs)?;
    }
    let (data, _) = artifact::load_dataset(b, &Artifact::read(&a.input)?)?;
    if data.p() != plan.p {
        return Err(ElsError::Data(format!("dataset has {} covariates, the fit {}", data.p(), plan.p)).into());
    }
    let n = if plan.is_ridge() && data.n() == plan.rows() { plan.n } else { data.n() };
    let rows: Vec<usize> = (0..n).collect();
    let (preds, scale) = predict_rows(b, &data, &rows, &coeffs)?;
    artifact::predictions_artifact(b, &preds, &scale, Some(&plan), plan.phi).write(&a.out)?;
    println!("{n} encrypted predictions written to {}", a.out.display());
    Ok(())
}

pub fn predict(a: PredictArgs) -> Result<()> {
    let fit = Artifact::read(&a.fit)?;
    match a.backend {
        BackendKind::Oracle => predict_with(&OracleBackend::default(), &fit, &a),
        BackendKind::Fv => {
            let plan = fit.meta.plan.clone().ok_or_else(|| ElsError::Format("coefficients without a plan".into()))?;
            let b = fv_evaluator(keys_dir(&a.keys)?, &plan, b"predict")?;
            predict_with(&b, &fit, &a)
        }
    }
}

pub fn simulate_cmd(a: SimulateArgs) -> Result<()> {
    let bundle = if a.ar2 {
        let mut spec = Ar2Spec::mood(a.seed);
        spec.n = a.n;
        spec.sigma = a.sigma;
        simulate_ar2(&spec)?
    } else {
        let mut spec = SimulationSpec::new(a.n, a.p, a.rho, a.seed);
        spec.sigma = a.sigma;
        simulate(&spec)?.bundle
    };
    let mut w = csv_writer(&a.out)?;
    let mut header = bundle.names.clone();
    header.push(bundle.response.clone());
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..bundle.n() {
        let mut row: Vec<String> = (0..bundle.p()).map(|j| bundle.raw_x.get(i, j).to_string()).collect();
        row.push(bundle.raw_y[i].to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    println!("{} rows, {} covariates written to {}", bundle.n(), bundle.p(), a.out.display());
    Ok(())
}

pub fn benchmark(a: BenchmarkArgs) -> Result<()> {
    let mut data = SimulationSpec::new(a.n, a.p, a.rho, 0);
    data.sigma = a.sigma;
    let suite = FixedDepthSuite {
        algorithms: a.algorithms,
        mmds: a.mmd,
        data,
        seeds: (1..=a.seeds).collect(),
        phi: a.phi,
        rule: a.step,
        encrypted: a.encrypted,
    };
    let records = suite.run()?;
    match &a.out {
        None => write_csv(&records, io::stdout().lock())?,
        Some(path) => {
            write_csv(&records, File::create(path)?)?;
            println!("{:<8} {:>5} {:>4} {:>12}", "algo", "mmd", "K", "mean rmsd");
            for &mmd in &suite.mmds {
                for &alg in &suite.algorithms {
                    let sel: Vec<_> = records.iter().filter(|r| r.mmd == mmd && r.algorithm == alg).collect();
                    let mean = sel.iter().map(|r| r.rmsd).sum::<f64>() / sel.len().max(1) as f64;
                    let k = sel.first().map(|r| r.k).unwrap_or(0);
                    println!("{:<8} {mmd:>5} {k:>4} {mean:>12.4e}", alg.name());
                }
            }
            println!("{} records written to {}", records.len(), path.display());
        }
    }
    Ok(())
}

pub fn bootstrap(a: BootstrapArgs) -> Result<()> {
    let data = load_data(&a.data.data, &a.data.response)?;
    let fit = |b: &DatasetBundle<f64>| {
        let plan = plan_for(b, a.algorithm, a.k, a.phi, a.step, "0")?;
        match a.backend {
            BootstrapBackend::Float => reference_fit::<f64, f64>(b, &plan),
            BootstrapBackend::Oracle => Ok(fit_on_backend(&OracleBackend::default(), b, &plan)?.coefficients),
        }
    };
    let boot = bootstrap_se(&data, a.resamples, a.seed, fit)?;
    let closed = closed_form_se(&data)?;
    if boot.redrawn > 0 {
        println!("{} singular resamples redrawn", boot.redrawn);
    }
    println!("{:<12} {:>14} {:>14}", "term", "bootstrap se", "closed form");
    for (j, name) in data.names.iter().enumerate() {
        println!("{name:<12} {:>14.6} {:>14.6}", boot.se[j], closed[j]);
    }
    if let Some(path) = &a.out {
        let mut w = csv_writer(path)?;
        w.write_record(["term", "bootstrap_se", "closed_form_se"]).map_err(csv_err)?;
        for (j, name) in data.names.iter().enumerate() {
            w.write_record([name.clone(), boot.se[j].to_string(), closed[j].to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
    }
    Ok(())
}
