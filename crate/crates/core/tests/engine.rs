use els_core::backend::{Backend, OracleBackend};
use els_core::data::pipeline::{encode_bundle, fit_on_backend, plan_for, reference_fit};
use els_core::data::{simulate, SimulationSpec};
use els_core::depth::{lemma3_bounds, observed_growth, Momentum};
use els_core::engine::artifact::{self, Artifact};
use els_core::engine::scaling::{gd_scale, nag_momentum_scale};
use els_core::engine::{decode_coefficients, encrypt_dataset, output_depth, run_plan};
use els_core::reference::{self, StepRule};
use els_core::{Algorithm, ElsError, FitPlan, Rational};
use num_bigint::BigInt;
use num_traits::Zero;
use proptest::prelude::*;

fn bundle(n: usize, p: usize, seed: u64) -> els_core::data::DatasetBundle<f64> {
    simulate(&SimulationSpec::new(n, p, 0.3, seed)).unwrap().bundle
}

fn rational(v: &BigInt, scale: &BigInt) -> Rational {
    Rational::new(v.clone(), scale.clone())
}

#[test]
fn depth_matches_formula_for_every_algorithm() {
    let b = OracleBackend::default();
    for p in 1..=5 {
        let data = bundle(12, p, p as u64);
        for k in 1..=4 {
            for alg in Algorithm::ALL {
                for pred in [false, true] {
                    let mut plan = plan_for(&data, alg, k, 2, StepRule::Optimal, "0").unwrap();
                    plan.include_prediction = pred;
                    let (x, y) = encode_bundle(&data, &plan).unwrap();
                    let enc = encrypt_dataset(&b, &x, &y).unwrap();
                    let out = run_plan(&b, &enc, &plan).unwrap();
                    let table = match alg {
                        Algorithm::Gd => 2 * k,
                        Algorithm::GdVwt => 2 * k + 1,
                        Algorithm::Nag => 3 * k,
                        Algorithm::Cd => 2 * k * p as u32,
                    } + pred as u32;
                    assert_eq!(output_depth(&b, &out), table, "{alg} K={k} P={p} pred={pred}");
                    assert_eq!(plan.mmd(), table);
                }
            }
        }
    }
}

#[test]
fn single_coordinate_cd_is_gd() {
    let b = OracleBackend::default();
    let data = bundle(15, 1, 3);
    let gd = plan_for(&data, Algorithm::Gd, 3, 2, StepRule::Optimal, "0").unwrap();
    let cd = FitPlan {
        algorithm: Algorithm::Cd,
        ..gd.clone()
    };
    let (x, y) = encode_bundle(&data, &gd).unwrap();
    let enc = encrypt_dataset(&b, &x, &y).unwrap();
    let a = run_plan(&b, &enc, &gd).unwrap();
    let c = run_plan(&b, &enc, &cd).unwrap();
    assert_eq!(b.decrypt(&a.coeffs.beta[0]).unwrap(), b.decrypt(&c.coeffs.beta[0]).unwrap());
    assert_eq!(a.coeffs.scale_of(0), c.coeffs.scale_of(0));
}

#[test]
fn nag_without_momentum_is_gd() {
    let b = OracleBackend::default();
    let data = bundle(20, 3, 4);
    let gd = plan_for(&data, Algorithm::Gd, 4, 2, StepRule::Optimal, "0").unwrap();
    let nag = FitPlan {
        algorithm: Algorithm::Nag,
        momentum: Momentum::Constant("0".into()),
        ..gd.clone()
    };
    let (x, y) = encode_bundle(&data, &gd).unwrap();
    let enc = encrypt_dataset(&b, &x, &y).unwrap();
    let g: Vec<Rational> = decode_coefficients(&b, &run_plan(&b, &enc, &gd).unwrap().coeffs).unwrap();
    let n: Vec<Rational> = decode_coefficients(&b, &run_plan(&b, &enc, &nag).unwrap().coeffs).unwrap();
    assert_eq!(g, n);
}

#[test]
fn decoded_results_equal_exact_recursions() {
    let b = OracleBackend::default();
    for seed in 0..4 {
        let data = bundle(25, 3, seed);
        for alg in Algorithm::ALL {
            for momentum in [Momentum::Nesterov, Momentum::NesterovPositive] {
                let mut plan = plan_for(&data, alg, 3, 2, StepRule::Optimal, "0").unwrap();
                plan.momentum = momentum;
                let fit = fit_on_backend(&b, &data, &plan).unwrap();
                let decoded: Vec<Rational> = decode_coefficients(&b, &fit.output.coeffs).unwrap();
                let exact: Vec<Rational> = reference_fit(&data, &plan).unwrap();
                assert_eq!(decoded, exact, "{alg} seed {seed}");
            }
        }
    }
}

#[test]
fn every_gd_and_nag_iterate_carries_its_scale() {
    let b = OracleBackend::default();
    let data = bundle(18, 2, 7);
    let plan = plan_for(&data, Algorithm::Nag, 4, 2, StepRule::Optimal, "0").unwrap();
    let (x, y) = encode_bundle(&data, &plan).unwrap();
    let enc = encrypt_dataset(&b, &x, &y).unwrap();
    let out = run_plan(&b, &enc, &plan).unwrap();
    let f = Rational::from_integer(els_core::scalar::pow10(plan.phi));
    let xr = x.map(|v| Rational::from_integer(v.clone()) / &f);
    let yr: Vec<Rational> = y.iter().map(|v| Rational::from_integer(v.clone()) / &f).collect();
    let delta = Rational::new(1.into(), plan.nu.into());
    let etas: Vec<Rational> = (1..=4)
        .map(|i| Rational::new(plan.momentum.encoded(i, 2).unwrap(), 100.into()))
        .collect();
    let nag = reference::float_nag(&xr, &yr, &delta, 4, |i| etas[i as usize - 1].clone());
    for k in 1..=4u32 {
        let s_scale = nag_momentum_scale(2, plan.nu, k);
        let beta_scale = els_core::engine::scaling::nag_scale(2, plan.nu, k);
        for j in 0..2 {
            let s = rational(&b.decrypt(&out.momentum[k as usize - 1][j]).unwrap(), &s_scale);
            assert_eq!(s, nag.s[k as usize][j]);
            let beta = rational(&b.decrypt(&out.trajectory[k as usize - 1][j]).unwrap(), &beta_scale);
            assert_eq!(beta, nag.beta[k as usize][j]);
        }
    }

    let gd_plan = FitPlan {
        algorithm: Algorithm::Gd,
        ..plan.clone()
    };
    let out = run_plan(&b, &enc, &gd_plan).unwrap();
    let traj = reference::float_gd(&xr, &yr, &delta, 4);
    for k in 1..=4u32 {
        for j in 0..2 {
            let v = rational(&b.decrypt(&out.trajectory[k as usize - 1][j]).unwrap(), &gd_scale(2, plan.nu, k));
            assert_eq!(v, traj[k as usize][j]);
        }
    }
}

#[test]
fn predictions_decode_to_fitted_values() {
    let b = OracleBackend::default();
    let data = bundle(15, 3, 2);
    for alg in Algorithm::ALL {
        let mut plan = plan_for(&data, alg, 2, 2, StepRule::Optimal, "0").unwrap();
        plan.include_prediction = true;
        let fit = fit_on_backend(&b, &data, &plan).unwrap();
        let (xe, _) = encode_bundle(&data, &plan).unwrap();
        let x = xe.map(|v| v.to_string().parse::<f64>().unwrap() / 100.0);
        let expect = x.mul_vec(&fit.coefficients);
        let got = fit.predictions.unwrap();
        assert_eq!(got.len(), 15);
        for (a, e) in got.iter().zip(&expect) {
            assert!((a - e).abs() < 1e-9, "{alg}: {a} vs {e}");
        }
    }
}

#[test]
fn ridge_fit_matches_augmented_reference() {
    let b = OracleBackend::default();
    let data = bundle(20, 3, 11);
    let plan = plan_for(&data, Algorithm::Gd, 3, 2, StepRule::Optimal, "2.5").unwrap();
    let fit = fit_on_backend(&b, &data, &plan).unwrap();
    let exact: Vec<Rational> = reference_fit(&data, &plan).unwrap();
    let decoded: Vec<Rational> = decode_coefficients(&b, &fit.output.coeffs).unwrap();
    assert_eq!(decoded, exact);
}

#[test]
fn mismatched_plan_is_rejected() {
    let b = OracleBackend::default();
    let data = bundle(10, 2, 1);
    let plan = plan_for(&data, Algorithm::Gd, 1, 2, StepRule::Optimal, "0").unwrap();
    let (x, y) = encode_bundle(&data, &plan).unwrap();
    let enc = encrypt_dataset(&b, &x, &y).unwrap();
    let wrong = FitPlan { p: 3, ..plan.clone() };
    assert!(matches!(run_plan(&b, &enc, &wrong), Err(ElsError::InvalidPlan(_))));
    let zero = FitPlan { k: 0, ..plan };
    assert!(matches!(run_plan(&b, &enc, &zero), Err(ElsError::InvalidPlan(_))));
}

#[test]
fn artifacts_roundtrip_and_check_keys() {
    let b = OracleBackend::default();
    let data = bundle(10, 2, 5);
    for alg in [Algorithm::Gd, Algorithm::Cd] {
        let plan = plan_for(&data, alg, 2, 2, StepRule::Optimal, "0").unwrap();
        let (x, y) = encode_bundle(&data, &plan).unwrap();
        let enc = encrypt_dataset(&b, &x, &y).unwrap();
        let ds = Artifact::from_bytes(&artifact::dataset_artifact(&b, &enc, 2).to_bytes()).unwrap();
        let (back, phi) = artifact::load_dataset(&b, &ds).unwrap();
        assert_eq!(phi, 2);
        let out = run_plan(&b, &back, &plan).unwrap();
        let a = artifact::coefficients_artifact(&b, &out.coeffs, &plan);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.els");
        a.write(&path).unwrap();
        let read = Artifact::read(&path).unwrap();
        assert_eq!(read, a);
        let coeffs = artifact::load_coefficients(&b, &read).unwrap();
        let x: Vec<Rational> = decode_coefficients(&b, &coeffs).unwrap();
        let y: Vec<Rational> = decode_coefficients(&b, &out.coeffs).unwrap();
        assert_eq!(x, y);
        assert_eq!(read.meta.depths.iter().max(), Some(&plan.mmd()));
        assert!(matches!(
            artifact::load_dataset(&b, &read),
            Err(ElsError::Format(_))
        ));
    }
    let bytes = artifact::dataset_artifact(&b, &encrypt_dataset(&b, &els_core::Matrix::new(1, 1, vec![BigInt::zero()]), &[BigInt::zero()]).unwrap(), 2).to_bytes();
    assert!(Artifact::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(Artifact::from_bytes(b"NOTANART").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn observed_growth_within_lemma3(seed in 0u64..1000, n in 5usize..40, p in 1usize..5, k in 1u32..4) {
        let data = bundle(n, p, seed);
        let plan = plan_for(&data, Algorithm::Gd, k, 2, StepRule::Optimal, "0").unwrap();
        let b = OracleBackend::polynomial();
        let (x, y) = encode_bundle(&data, &plan).unwrap();
        let enc = encrypt_dataset(&b, &x, &y).unwrap();
        let out = run_plan(&b, &enc, &plan).unwrap();
        let mut trace = vec![vec![vec![BigInt::zero()]; p]];
        for it in &out.trajectory {
            trace.push(it.iter().map(|s| s.poly().unwrap().to_vec()).collect());
        }
        let bounds = lemma3_bounds(&plan).unwrap();
        prop_assert!(observed_growth(&trace).within(&bounds));
    }
}
