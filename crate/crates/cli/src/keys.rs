//! Key files on disk: params.bin, public.key, relin.key, secret.key.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use els_core::backend::FvBackend;
use els_core::{ElsError, FitPlan, Result};
use els_fhe::serialize::*;
use els_fhe::{FvContext, FvParams, KeyPair};

const PARAMS: &str = "params.bin";
const PUBLIC: &str = "public.key";
const RELIN: &str = "relin.key";
const SECRET: &str = "secret.key";

fn read(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    fs::read(&path).map_err(|e| ElsError::KeyMismatch(format!("cannot read {}: {e}", path.display())))
}

pub fn write_keys(dir: &Path, ctx: &FvContext, keys: &KeyPair) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(PARAMS), params_to_bytes(ctx.params()))?;
    fs::write(dir.join(PUBLIC), public_key_to_bytes(ctx, &keys.public))?;
    fs::write(dir.join(RELIN), relin_key_to_bytes(ctx, &keys.relin))?;
    fs::write(dir.join(SECRET), secret_key_to_bytes(ctx, &keys.secret))?;
    Ok(())
}

pub fn load_context(dir: &Path) -> Result<Arc<FvContext>> {
    let params = params_from_bytes(&read(dir, PARAMS)?)?;
    Ok(FvContext::new(params)?)
}

/// Fails unless the key directory was generated for this plan.
pub fn check_plan(ctx: &FvContext, plan: &FitPlan) -> Result<()> {
    let want: FvParams = els_core::select_params(plan)?.params;
    if ctx.params() != &want {
        return Err(ElsError::KeyMismatch(
            "keys were generated for different parameters than this plan needs".into(),
        ));
    }
    Ok(())
}

/// Public and relinearization keys only.
pub fn evaluator(dir: &Path, seed: &[u8]) -> Result<FvBackend> {
    let ctx = load_context(dir)?;
    let public = public_key_from_bytes(&ctx, &read(dir, PUBLIC)?)?;
    let relin = relin_key_from_bytes(&ctx, &read(dir, RELIN)?)?;
    Ok(FvBackend::evaluator(ctx, public, relin, seed))
}

pub fn decryptor(dir: &Path) -> Result<FvBackend> {
    let b = evaluator(dir, b"decrypt")?;
    let secret = secret_key_from_bytes(b.context(), &read(dir, SECRET)?)?;
    Ok(b.with_secret(secret))
}
