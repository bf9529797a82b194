//! Key generation, encryption, decryption and homomorphic operations.

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};

use crate::params::{log2_big, FvContext};
use crate::plaintext::Plaintext;
use crate::rns::{center_mod, residue};
use crate::sampling::Sampler;
use crate::{FheError, Result};

/// FV ciphertext in coefficient form modulo q, prime-major residues.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ciphertext {
    pub(crate) parts: Vec<Vec<u64>>,
    pub(crate) level: u32,
    pub(crate) fingerprint: u64,
}

impl Ciphertext {
    /// Multiplications on the deepest input path.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// 2 after relinearization, 3 straight out of a tensor product.
    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Residues of part `i`, row-major over the primes of q.
    pub fn part(&self, i: usize) -> &[u64] {
        &self.parts[i]
    }
}

#[derive(Clone, Debug)]
pub struct SecretKey {
    pub(crate) s: Vec<i64>,
    pub(crate) s_ntt: Vec<u64>,
    pub(crate) fingerprint: u64,
}

#[derive(Clone, Debug)]
pub struct PublicKey {
    pub(crate) p0: Vec<u64>,
    pub(crate) p1: Vec<u64>,
    pub(crate) fingerprint: u64,
}

/// Key-switching material for s^2, one pair per (prime, digit).
#[derive(Clone, Debug)]
pub struct RelinKey {
    pub(crate) keys: Vec<(Vec<u64>, Vec<u64>)>,
    pub(crate) fingerprint: u64,
}

#[derive(Clone, Debug)]
pub struct KeyPair {
    pub secret: SecretKey,
    pub public: PublicKey,
    pub relin: RelinKey,
}

/// A ciphertext lifted to the extended basis and transformed, ready to
/// enter tensor products. Preparing once amortises the lift across every
/// product the ciphertext takes part in.
#[derive(Clone, Debug)]
pub struct PreparedCiphertext {
    parts: Vec<Vec<u64>>,
    level: u32,
    fingerprint: u64,
}

impl PreparedCiphertext {
    pub fn level(&self) -> u32 {
        self.level
    }
}

fn check(ctx: &FvContext, fp: u64) -> Result<()> {
    if fp == ctx.fingerprint {
        Ok(())
    } else {
        Err(FheError::ParameterMismatch)
    }
}

impl FvContext {
    fn ntt_q(&self, poly: &mut [u64]) {
        let d = self.params.d;
        for (row, table) in poly.chunks_mut(d).zip(&self.q_ntt) {
            table.forward(row);
        }
    }

    fn intt_q(&self, poly: &mut [u64]) {
        let d = self.params.d;
        for (row, table) in poly.chunks_mut(d).zip(&self.q_ntt) {
            table.inverse(row);
        }
    }

    fn small_to_q(&self, coeffs: &[i64]) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.q.len() * coeffs.len());
        for m in self.q.moduli() {
            out.extend(coeffs.iter().map(|&c| m.from_i64(c)));
        }
        out
    }

    fn big_to_q(&self, coeffs: &[BigInt]) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.q.len() * coeffs.len());
        for m in self.q.moduli() {
            out.extend(coeffs.iter().map(|c| {
                if c.is_zero() {
                    0
                } else {
                    residue(c, m.value())
                }
            }));
        }
        out
    }

    fn pointwise(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let d = self.params.d;
        let mut out = vec![0; a.len()];
        for (i, m) in self.q.moduli().iter().enumerate() {
            let r = i * d..(i + 1) * d;
            for ((o, &x), &y) in out[r.clone()].iter_mut().zip(&a[r.clone()]).zip(&b[r]) {
                *o = m.mul(x, y);
            }
        }
        out
    }

    fn add_into(&self, acc: &mut [u64], b: &[u64]) {
        let d = self.params.d;
        for (i, m) in self.q.moduli().iter().enumerate() {
            let r = i * d..(i + 1) * d;
            for (x, &y) in acc[r.clone()].iter_mut().zip(&b[r]) {
                *x = m.add(*x, y);
            }
        }
    }

    fn neg_poly(&self, a: &[u64]) -> Vec<u64> {
        let d = self.params.d;
        let mut out = a.to_vec();
        for (row, m) in out.chunks_mut(d).zip(self.q.moduli()) {
            for x in row {
                *x = m.neg(*x);
            }
        }
        out
    }

    /// c0 + c1 s + c2 s^2 + ... in coefficient form.
    fn phase(&self, sk: &SecretKey, ct: &Ciphertext) -> Vec<u64> {
        let mut acc = ct.parts[0].clone();
        let mut s_pow = sk.s_ntt.clone();
        for (j, part) in ct.parts.iter().enumerate().skip(1) {
            let mut p = part.clone();
            self.ntt_q(&mut p);
            let mut prod = self.pointwise(&p, &s_pow);
            self.intt_q(&mut prod);
            self.add_into(&mut acc, &prod);
            if j + 1 < ct.parts.len() {
                s_pow = self.pointwise(&s_pow, &sk.s_ntt);
            }
        }
        acc
    }

    fn coefficient(&self, poly: &[u64], c: usize) -> Vec<u64> {
        let d = self.params.d;
        (0..self.q.len()).map(|i| poly[i * d + c]).collect()
    }
}

pub(crate) fn secret_from_coeffs(ctx: &FvContext, s: Vec<i64>) -> SecretKey {
    let mut s_ntt = ctx.small_to_q(&s);
    ctx.ntt_q(&mut s_ntt);
    SecretKey {
        s,
        s_ntt,
        fingerprint: ctx.fingerprint,
    }
}

/// Deterministic key generation from a seed.
pub fn keygen(ctx: &FvContext, seed: &[u8]) -> KeyPair {
    let d = ctx.params.d;
    let k = ctx.q.len();
    let s = Sampler::new(b"fv-secret", seed).ternary(d);
    let mut s_ntt = ctx.small_to_q(&s);
    ctx.ntt_q(&mut s_ntt);

    let mut rng = Sampler::new(b"fv-public", seed);
    let fresh_pair = |rng: &mut Sampler| -> (Vec<u64>, Vec<u64>) {
        // a is drawn directly in the transform domain
        let a: Vec<u64> = ctx
            .q
            .moduli()
            .iter()
            .flat_map(|m| rng.uniform(d, m.value()))
            .collect();
        let mut e = ctx.small_to_q(&rng.error(d, ctx.params.sigma));
        ctx.ntt_q(&mut e);
        let mut b = ctx.pointwise(&a, &s_ntt);
        ctx.add_into(&mut b, &e);
        (ctx.neg_poly(&b), a)
    };
    let (p0, p1) = fresh_pair(&mut rng);

    let s2 = ctx.pointwise(&s_ntt, &s_ntt);
    let mut rng = Sampler::new(b"fv-relin", seed);
    let mut keys = Vec::with_capacity(k * ctx.digits);
    for i in 0..k {
        let m = &ctx.q.moduli()[i];
        let mut power = 1u64;
        for _ in 0..ctx.digits {
            let (mut k0, k1) = fresh_pair(&mut rng);
            // CRT idempotent for prime i times w^b: only row i is nonzero
            for c in 0..d {
                let x = &mut k0[i * d + c];
                *x = m.add(*x, m.mul(power, s2[i * d + c]));
            }
            keys.push((k0, k1));
            power = m.mul(power, m.reduce(ctx.params.relin_base));
        }
    }
    let fingerprint = ctx.fingerprint;
    KeyPair {
        secret: SecretKey {
            s,
            s_ntt,
            fingerprint,
        },
        public: PublicKey { p0, p1, fingerprint },
        relin: RelinKey { keys, fingerprint },
    }
}

pub fn encrypt(ctx: &FvContext, pk: &PublicKey, m: &Plaintext, seed: &[u8]) -> Result<Ciphertext> {
    check(ctx, pk.fingerprint)?;
    let d = ctx.params.d;
    if m.len() != d {
        return Err(FheError::LengthMismatch(m.len(), d));
    }
    let mut rng = Sampler::new(b"fv-encrypt", seed);
    let u = rng.ternary(d);
    let e1 = rng.error(d, ctx.params.sigma);
    let e2 = rng.error(d, ctx.params.sigma);
    let mut u_ntt = ctx.small_to_q(&u);
    ctx.ntt_q(&mut u_ntt);

    let mut c0 = ctx.pointwise(&pk.p0, &u_ntt);
    ctx.intt_q(&mut c0);
    ctx.add_into(&mut c0, &ctx.small_to_q(&e1));
    let mut scaled = ctx.big_to_q(m.coeffs());
    for (i, (row, md)) in scaled.chunks_mut(d).zip(ctx.q.moduli()).enumerate() {
        for x in row {
            *x = md.mul(*x, ctx.delta_mod_q[i]);
        }
    }
    ctx.add_into(&mut c0, &scaled);

    let mut c1 = ctx.pointwise(&pk.p1, &u_ntt);
    ctx.intt_q(&mut c1);
    ctx.add_into(&mut c1, &ctx.small_to_q(&e2));
    Ok(Ciphertext {
        parts: vec![c0, c1],
        level: 0,
        fingerprint: ctx.fingerprint,
    })
}

/// Exact while the noise budget is positive; garbage afterwards.
pub fn decrypt(ctx: &FvContext, sk: &SecretKey, ct: &Ciphertext) -> Result<Plaintext> {
    check(ctx, sk.fingerprint)?;
    check(ctx, ct.fingerprint)?;
    let x = ctx.phase(sk, ct);
    let q = ctx.q.product();
    let half_q: BigUint = q >> 1;
    let t = &ctx.params.t;
    let coeffs = (0..ctx.params.d)
        .map(|c| {
            let v = ctx.q.compose(&ctx.coefficient(&x, c));
            let m = (v * t + &half_q) / q;
            center_mod(&BigInt::from(m), t)
        })
        .collect();
    Ok(Plaintext::from_reduced(coeffs))
}

/// Remaining headroom in bits: log2(q) - 1 - log2 max |[t (c0 + c1 s)]_q|.
/// Decryption is guaranteed while this is positive.
pub fn noise_budget(ctx: &FvContext, sk: &SecretKey, ct: &Ciphertext) -> Result<f64> {
    check(ctx, sk.fingerprint)?;
    check(ctx, ct.fingerprint)?;
    let x = ctx.phase(sk, ct);
    let q = ctx.q.product();
    let mut worst = BigUint::zero();
    for c in 0..ctx.params.d {
        let mut coeff = ctx.coefficient(&x, c);
        for (i, m) in ctx.q.moduli().iter().enumerate() {
            coeff[i] = m.mul(coeff[i], ctx.t_mod_q[i]);
        }
        let v = ctx.q.compose_centered(&coeff).abs().to_biguint().unwrap();
        if v > worst {
            worst = v;
        }
    }
    let log_q = log2_big(q);
    if worst.is_zero() {
        return Ok(log_q - 1.0);
    }
    Ok(log_q - 1.0 - log2_big(&worst))
}

pub fn add(ctx: &FvContext, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    check(ctx, a.fingerprint)?;
    check(ctx, b.fingerprint)?;
    let (long, short) = if a.parts.len() >= b.parts.len() {
        (a, b)
    } else {
        (b, a)
    };
    let mut parts = long.parts.clone();
    for (p, s) in parts.iter_mut().zip(&short.parts) {
        ctx.add_into(p, s);
    }
    Ok(Ciphertext {
        parts,
        level: a.level.max(b.level),
        fingerprint: ctx.fingerprint,
    })
}

pub fn neg(ctx: &FvContext, a: &Ciphertext) -> Result<Ciphertext> {
    check(ctx, a.fingerprint)?;
    Ok(Ciphertext {
        parts: a.parts.iter().map(|p| ctx.neg_poly(p)).collect(),
        level: a.level,
        fingerprint: ctx.fingerprint,
    })
}

pub fn sub(ctx: &FvContext, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    add(ctx, a, &neg(ctx, b)?)
}

pub fn plain_add(ctx: &FvContext, a: &Ciphertext, m: &Plaintext) -> Result<Ciphertext> {
    check(ctx, a.fingerprint)?;
    let d = ctx.params.d;
    if m.len() != d {
        return Err(FheError::LengthMismatch(m.len(), d));
    }
    let mut scaled = ctx.big_to_q(m.coeffs());
    for (i, (row, md)) in scaled.chunks_mut(d).zip(ctx.q.moduli()).enumerate() {
        for x in row {
            *x = md.mul(*x, ctx.delta_mod_q[i]);
        }
    }
    let mut out = a.clone();
    ctx.add_into(&mut out.parts[0], &scaled);
    Ok(out)
}

/// Multiplies by a plaintext polynomial. Counted as one level.
pub fn plain_mul(ctx: &FvContext, a: &Ciphertext, m: &Plaintext) -> Result<Ciphertext> {
    check(ctx, a.fingerprint)?;
    let d = ctx.params.d;
    if m.len() != d {
        return Err(FheError::LengthMismatch(m.len(), d));
    }
    let mut w = ctx.big_to_q(m.coeffs());
    ctx.ntt_q(&mut w);
    let parts = a
        .parts
        .iter()
        .map(|p| {
            let mut x = p.clone();
            ctx.ntt_q(&mut x);
            let mut y = ctx.pointwise(&x, &w);
            ctx.intt_q(&mut y);
            y
        })
        .collect();
    Ok(Ciphertext {
        parts,
        level: a.level + 1,
        fingerprint: ctx.fingerprint,
    })
}

pub fn prepare(ctx: &FvContext, a: &Ciphertext) -> Result<PreparedCiphertext> {
    check(ctx, a.fingerprint)?;
    let d = ctx.params.d;
    let parts = a
        .parts
        .iter()
        .map(|p| {
            let mut ext = p.clone();
            ext.extend(ctx.q_to_aux.convert(p, d));
            let tables = ctx.q_ntt.iter().chain(&ctx.aux_ntt);
            for (row, table) in ext.chunks_mut(d).zip(tables) {
                table.forward(row);
            }
            ext
        })
        .collect();
    Ok(PreparedCiphertext {
        parts,
        level: a.level,
        fingerprint: ctx.ext_fingerprint,
    })
}

/// Tensor-accumulates the pairs in the extended basis and returns the three
/// scaled parts round(t/q * sum) modulo q.
fn tensor_scale(
    ctx: &FvContext,
    pairs: &[(&PreparedCiphertext, &PreparedCiphertext)],
) -> Vec<Vec<u64>> {
    let d = ctx.params.d;
    let k = ctx.q.len();
    let moduli: Vec<_> = ctx.q.moduli().iter().chain(ctx.aux.moduli()).copied().collect();
    let rows = moduli.len();
    let mut acc = vec![vec![0u128; rows * d]; 3];
    let mut out = vec![vec![0u64; rows * d]; 3];
    let flush = |acc: &mut Vec<Vec<u128>>, out: &mut Vec<Vec<u64>>| {
        for (a, o) in acc.iter_mut().zip(out.iter_mut()) {
            for (r, m) in moduli.iter().enumerate() {
                for c in r * d..(r + 1) * d {
                    o[c] = m.add(o[c], m.reduce_u128(a[c]));
                    a[c] = 0;
                }
            }
        }
    };
    for (n, (a, b)) in pairs.iter().enumerate() {
        let (a0, a1, b0, b1) = (&a.parts[0], &a.parts[1], &b.parts[0], &b.parts[1]);
        for c in 0..rows * d {
            let (x0, x1, y0, y1) = (a0[c] as u128, a1[c] as u128, b0[c] as u128, b1[c] as u128);
            acc[0][c] += x0 * y0;
            acc[1][c] += x0 * y1 + x1 * y0;
            acc[2][c] += x1 * y1;
        }
        if n % 32 == 31 {
            flush(&mut acc, &mut out);
        }
    }
    flush(&mut acc, &mut out);

    out.into_iter()
        .map(|mut z| {
            let tables = ctx.q_ntt.iter().chain(&ctx.aux_ntt);
            for (row, table) in z.chunks_mut(d).zip(tables) {
                table.inverse(row);
            }
            let (zq, zaux) = z.split_at(k * d);
            let mut tz = zq.to_vec();
            for (i, (row, m)) in tz.chunks_mut(d).zip(ctx.q.moduli()).enumerate() {
                for x in row {
                    *x = m.mul(*x, ctx.t_mod_q[i]);
                }
            }
            let w = ctx.q_to_aux.convert(&tz, d);
            let mut r = vec![0u64; zaux.len()];
            for (j, m) in ctx.aux.moduli().iter().enumerate() {
                let (t_j, qinv) = (ctx.t_mod_aux[j], ctx.q_inv_mod_aux[j]);
                for c in j * d..(j + 1) * d {
                    r[c] = m.mul(m.sub(m.mul(zaux[c], t_j), w[c]), qinv);
                }
            }
            ctx.aux_to_q.convert(&r, d)
        })
        .collect()
}

fn relin_parts(ctx: &FvContext, rlk: &RelinKey, mut parts: Vec<Vec<u64>>) -> Vec<Vec<u64>> {
    let d = ctx.params.d;
    let k = ctx.q.len();
    let c2 = parts.pop().unwrap();
    let base = ctx.params.relin_base;
    let mut acc0 = vec![0u128; k * d];
    let mut acc1 = vec![0u128; k * d];
    let mut terms = 0;
    for i in 0..k {
        let mut rest: Vec<u64> = c2[i * d..(i + 1) * d].to_vec();
        for b in 0..ctx.digits {
            let digit: Vec<u64> = if base.is_power_of_two() {
                let shift = base.trailing_zeros();
                rest.iter_mut()
                    .map(|x| {
                        let v = *x & (base - 1);
                        *x >>= shift;
                        v
                    })
                    .collect()
            } else {
                rest.iter_mut()
                    .map(|x| {
                        let v = *x % base;
                        *x /= base;
                        v
                    })
                    .collect()
            };
            let (k0, k1) = &rlk.keys[i * ctx.digits + b];
            for (j, (table, m)) in ctx.q_ntt.iter().zip(ctx.q.moduli()).enumerate() {
                let mut row: Vec<u64> = digit.iter().map(|&v| m.reduce(v)).collect();
                table.forward(&mut row);
                let r = j * d..(j + 1) * d;
                for (c, &v) in r.clone().zip(&row) {
                    acc0[c] += v as u128 * k0[c] as u128;
                    acc1[c] += v as u128 * k1[c] as u128;
                }
            }
            terms += 1;
            if terms % 64 == 0 {
                for (j, m) in ctx.q.moduli().iter().enumerate() {
                    for c in j * d..(j + 1) * d {
                        acc0[c] = m.reduce_u128(acc0[c]) as u128;
                        acc1[c] = m.reduce_u128(acc1[c]) as u128;
                    }
                }
            }
        }
    }
    let finish = |acc: Vec<u128>| -> Vec<u64> {
        let mut out = vec![0u64; k * d];
        for (j, m) in ctx.q.moduli().iter().enumerate() {
            for c in j * d..(j + 1) * d {
                out[c] = m.reduce_u128(acc[c]);
            }
        }
        ctx.intt_q(&mut out);
        out
    };
    let delta0 = finish(acc0);
    let delta1 = finish(acc1);
    ctx.add_into(&mut parts[0], &delta0);
    ctx.add_into(&mut parts[1], &delta1);
    parts
}

/// Reduces a three-part ciphertext to two parts.
pub fn relinearize(ctx: &FvContext, rlk: &RelinKey, a: &Ciphertext) -> Result<Ciphertext> {
    check(ctx, rlk.fingerprint)?;
    check(ctx, a.fingerprint)?;
    if a.parts.len() == 2 {
        return Ok(a.clone());
    }
    if a.parts.len() != 3 {
        return Err(FheError::Format(format!("cannot relinearize {} parts", a.parts.len())));
    }
    Ok(Ciphertext {
        parts: relin_parts(ctx, rlk, a.parts.clone()),
        level: a.level,
        fingerprint: a.fingerprint,
    })
}

fn two_part(p: &PreparedCiphertext) -> Result<()> {
    if p.parts.len() == 2 {
        Ok(())
    } else {
        Err(FheError::Format("tensor inputs must have two parts".into()))
    }
}

/// Tensor product without relinearization.
pub fn multiply_no_relin(ctx: &FvContext, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    let (pa, pb) = (prepare(ctx, a)?, prepare(ctx, b)?);
    two_part(&pa)?;
    two_part(&pb)?;
    Ok(Ciphertext {
        parts: tensor_scale(ctx, &[(&pa, &pb)]),
        level: a.level.max(b.level) + 1,
        fingerprint: ctx.fingerprint,
    })
}

pub fn hom_mul(ctx: &FvContext, rlk: &RelinKey, a: &Ciphertext, b: &Ciphertext) -> Result<Ciphertext> {
    let (pa, pb) = (prepare(ctx, a)?, prepare(ctx, b)?);
    dot(ctx, rlk, &[(&pa, &pb)])
}

/// Sum of pairwise products with a single scaling and relinearization per
/// chunk of terms. Level is the deepest input plus one.
pub fn dot(
    ctx: &FvContext,
    rlk: &RelinKey,
    pairs: &[(&PreparedCiphertext, &PreparedCiphertext)],
) -> Result<Ciphertext> {
    check(ctx, rlk.fingerprint)?;
    if pairs.is_empty() {
        return Err(FheError::EmptyDot);
    }
    let mut level = 0;
    for (a, b) in pairs {
        if a.fingerprint != ctx.ext_fingerprint || b.fingerprint != ctx.ext_fingerprint {
            return Err(FheError::ParameterMismatch);
        }
        two_part(a)?;
        two_part(b)?;
        level = level.max(a.level).max(b.level);
    }
    let mut result: Option<Ciphertext> = None;
    for chunk in pairs.chunks(ctx.max_fused_terms) {
        let parts = relin_parts(ctx, rlk, tensor_scale(ctx, chunk));
        let ct = Ciphertext {
            parts,
            level: level + 1,
            fingerprint: ctx.fingerprint,
        };
        result = Some(match result {
            None => ct,
            Some(acc) => add(ctx, &acc, &ct)?,
        });
    }
    Ok(result.unwrap())
}
