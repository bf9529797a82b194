//! Backend over FV ciphertexts. Integers travel as their signed binary
//! message polynomials and come back by evaluation at 2.

use std::sync::{Arc, OnceLock};

use els_fhe::serialize::{ciphertext_from_bytes, ciphertext_to_bytes, public_key_to_bytes};
use els_fhe::{
    self as fhe, Ciphertext, FvContext, KeyPair, Plaintext, PreparedCiphertext, PublicKey, RelinKey,
    SecretKey,
};
use num_bigint::BigInt;
use sha2::{Digest, Sha256};

use super::{check_dot, next_instance, same_instance, Backend};
use crate::encoding::{eval_at_two, to_message_poly};
use crate::error::{ElsError, Result};

#[derive(Clone, Debug)]
pub struct FvScalar {
    ct: Arc<Ciphertext>,
    prepared: Arc<OnceLock<PreparedCiphertext>>,
    instance: u64,
}

impl FvScalar {
    pub fn ciphertext(&self) -> &Ciphertext {
        &self.ct
    }
}

pub struct FvBackend {
    ctx: Arc<FvContext>,
    public: PublicKey,
    relin: RelinKey,
    secret: Option<SecretKey>,
    seed: Vec<u8>,
    key_id: String,
    instance: u64,
}

impl std::fmt::Debug for FvBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FvBackend")
            .field("d", &self.ctx.degree())
            .field("key_id", &self.key_id)
            .field("has_secret", &self.secret.is_some())
            .finish()
    }
}

/// First 8 bytes of the public key digest, in hex.
pub fn public_key_id(ctx: &FvContext, pk: &PublicKey) -> String {
    let digest = Sha256::digest(public_key_to_bytes(ctx, pk));
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl FvBackend {
    /// Evaluator and decryptor. `seed` drives all encryption randomness.
    pub fn new(ctx: Arc<FvContext>, keys: KeyPair, seed: &[u8]) -> FvBackend {
        let mut b = FvBackend::evaluator(ctx, keys.public, keys.relin, seed);
        b.secret = Some(keys.secret);
        b
    }

    /// Encrypts and evaluates but cannot decrypt.
    pub fn evaluator(ctx: Arc<FvContext>, public: PublicKey, relin: RelinKey, seed: &[u8]) -> FvBackend {
        let key_id = public_key_id(&ctx, &public);
        FvBackend {
            ctx,
            public,
            relin,
            secret: None,
            seed: seed.to_vec(),
            key_id,
            instance: next_instance(),
        }
    }

    pub fn with_secret(mut self, secret: SecretKey) -> FvBackend {
        self.secret = Some(secret);
        self
    }

    pub fn context(&self) -> &Arc<FvContext> {
        &self.ctx
    }

    fn secret(&self) -> Result<&SecretKey> {
        self.secret
            .as_ref()
            .ok_or_else(|| ElsError::KeyMismatch("this backend holds no secret key".into()))
    }

    fn wrap(&self, ct: Ciphertext) -> FvScalar {
        FvScalar {
            ct: Arc::new(ct),
            prepared: Arc::new(OnceLock::new()),
            instance: self.instance,
        }
    }

    fn check(&self, a: &FvScalar) -> Result<()> {
        same_instance(a.instance, self.instance)
    }

    fn plaintext(&self, v: &BigInt) -> Result<Plaintext> {
        let coeffs = to_message_poly(v).to_big();
        if coeffs.len() > self.ctx.degree() {
            return Err(ElsError::Encoding(format!(
                "{}-bit integer does not fit a ring of degree {}",
                coeffs.len(),
                self.ctx.degree()
            )));
        }
        Ok(Plaintext::new(&coeffs, self.ctx.params())?)
    }

    fn prepared<'a>(&self, a: &'a FvScalar) -> Result<&'a PreparedCiphertext> {
        if let Some(p) = a.prepared.get() {
            return Ok(p);
        }
        let p = fhe::prepare(&self.ctx, &a.ct)?;
        Ok(a.prepared.get_or_init(|| p))
    }

    /// Decrypted message polynomial, trailing zeros dropped.
    pub fn decrypt_poly(&self, a: &FvScalar) -> Result<Vec<BigInt>> {
        self.check(a)?;
        let m = fhe::decrypt(&self.ctx, self.secret()?, &a.ct)?;
        Ok(m.trimmed().to_vec())
    }

    /// Remaining noise headroom in bits; needs the secret key.
    pub fn noise_budget(&self, a: &FvScalar) -> Result<f64> {
        self.check(a)?;
        Ok(fhe::noise_budget(&self.ctx, self.secret()?, &a.ct)?)
    }
}

impl Backend for FvBackend {
    type Scalar = FvScalar;

    fn name(&self) -> &'static str {
        "fv"
    }

    fn encrypt(&self, v: &BigInt, nonce: u64) -> Result<FvScalar> {
        let m = self.plaintext(v)?;
        let mut seed = self.seed.clone();
        seed.extend_from_slice(&nonce.to_le_bytes());
        Ok(self.wrap(fhe::encrypt(&self.ctx, &self.public, &m, &seed)?))
    }

    fn decrypt(&self, a: &FvScalar) -> Result<BigInt> {
        self.check(a)?;
        let m = fhe::decrypt(&self.ctx, self.secret()?, &a.ct)?;
        Ok(eval_at_two(m.coeffs()))
    }

    fn depth(&self, a: &FvScalar) -> u32 {
        a.ct.level()
    }

    fn add(&self, a: &FvScalar, b: &FvScalar) -> Result<FvScalar> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(fhe::add(&self.ctx, &a.ct, &b.ct)?))
    }

    fn neg(&self, a: &FvScalar) -> Result<FvScalar> {
        self.check(a)?;
        Ok(self.wrap(fhe::neg(&self.ctx, &a.ct)?))
    }

    fn sub(&self, a: &FvScalar, b: &FvScalar) -> Result<FvScalar> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.wrap(fhe::sub(&self.ctx, &a.ct, &b.ct)?))
    }

    fn mul(&self, a: &FvScalar, b: &FvScalar) -> Result<FvScalar> {
        self.dot(std::slice::from_ref(a), std::slice::from_ref(b))
    }

    fn plain_mul(&self, a: &FvScalar, w: &BigInt) -> Result<FvScalar> {
        self.check(a)?;
        let m = self.plaintext(w)?;
        Ok(self.wrap(fhe::plain_mul(&self.ctx, &a.ct, &m)?))
    }

    fn plain_add(&self, a: &FvScalar, w: &BigInt) -> Result<FvScalar> {
        self.check(a)?;
        let m = self.plaintext(w)?;
        Ok(self.wrap(fhe::plain_add(&self.ctx, &a.ct, &m)?))
    }

    fn dot(&self, a: &[FvScalar], b: &[FvScalar]) -> Result<FvScalar> {
        check_dot(a.len(), b.len())?;
        let mut pairs = Vec::with_capacity(a.len());
        for (x, y) in a.iter().zip(b) {
            self.check(x)?;
            self.check(y)?;
            pairs.push((self.prepared(x)?, self.prepared(y)?));
        }
        Ok(self.wrap(fhe::dot(&self.ctx, &self.relin, &pairs)?))
    }

    fn scalar_to_bytes(&self, a: &FvScalar) -> Vec<u8> {
        ciphertext_to_bytes(&self.ctx, &a.ct)
    }

    fn scalar_from_bytes(&self, buf: &[u8]) -> Result<FvScalar> {
        let ct = ciphertext_from_bytes(&self.ctx, buf).map_err(|e| match e {
            fhe::FheError::ParameterMismatch => {
                ElsError::KeyMismatch("ciphertext was made under other parameters".into())
            }
            other => ElsError::Fhe(other),
        })?;
        Ok(self.wrap(ct))
    }

    fn key_id(&self) -> String {
        self.key_id.clone()
    }
}
