//! Versioned little-endian encodings for parameters, keys and ciphertexts.
//!
//! Every object starts with a four-byte magic, a u16 format version and the
//! parameter header (d, t, moduli, sigma, relinearization base). Polynomials
//! are a u64 count followed by that many u64 residues.

use num_bigint::BigUint;

use crate::params::FvContext;
use crate::scheme::{Ciphertext, PublicKey, RelinKey, SecretKey};
use crate::{FheError, FvParams, Result};

pub const FORMAT_VERSION: u16 = 1;

const PARAMS_MAGIC: &[u8; 4] = b"FVPA";
const CT_MAGIC: &[u8; 4] = b"FVCT";
const SK_MAGIC: &[u8; 4] = b"FVSK";
const PK_MAGIC: &[u8; 4] = b"FVPK";
const RK_MAGIC: &[u8; 4] = b"FVRK";

struct Writer(Vec<u8>);

impl Writer {
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u64(b.len() as u64);
        self.0.extend_from_slice(b);
    }
    fn poly(&mut self, p: &[u64]) {
        self.u64(p.len() as u64);
        for &x in p {
            self.u64(x);
        }
    }
    fn header(&mut self, magic: &[u8; 4], params: &FvParams) {
        self.0.extend_from_slice(magic);
        self.u16(FORMAT_VERSION);
        self.u32(params.d as u32);
        self.bytes(&params.t.to_bytes_le());
        self.u32(params.moduli.len() as u32);
        for &p in &params.moduli {
            self.u64(p);
        }
        self.u64(params.sigma.to_bits());
        self.u64(params.relin_base);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

fn short() -> FheError {
    FheError::Format("unexpected end of input".into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or_else(short)?;
        let s = self.buf.get(self.pos..end).ok_or_else(short)?;
        self.pos = end;
        Ok(s)
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()? as usize;
        if n > self.buf.len() {
            return Err(short());
        }
        Ok(n)
    }
    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.len()?;
        self.take(n)
    }
    fn poly(&mut self, expect: usize) -> Result<Vec<u64>> {
        let n = self.len()?;
        if n != expect {
            return Err(FheError::Format(format!("polynomial of {n} residues, expected {expect}")));
        }
        let raw = self.take(n * 8)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
    fn header(&mut self, magic: &[u8; 4]) -> Result<FvParams> {
        if self.take(4)? != magic {
            return Err(FheError::Format(format!(
                "bad magic, expected {}",
                String::from_utf8_lossy(magic)
            )));
        }
        let version = self.u16()?;
        if version != FORMAT_VERSION {
            return Err(FheError::Format(format!("unsupported format version {version}")));
        }
        let d = self.u32()? as usize;
        let t = BigUint::from_bytes_le(self.bytes()?);
        let k = self.u32()? as usize;
        if k > 1024 {
            return Err(FheError::Format("too many moduli".into()));
        }
        let moduli = (0..k).map(|_| self.u64()).collect::<Result<Vec<_>>>()?;
        let sigma = f64::from_bits(self.u64()?);
        let relin_base = self.u64()?;
        FvParams::new(d, t, moduli, sigma, relin_base)
    }
    fn finish(&self) -> Result<()> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(FheError::Format("trailing bytes".into()))
        }
    }
}

fn header_for(ctx: &FvContext, r: &mut Reader, magic: &[u8; 4]) -> Result<()> {
    let params = r.header(magic)?;
    if params != *ctx.params() {
        return Err(FheError::ParameterMismatch);
    }
    Ok(())
}

pub fn params_to_bytes(params: &FvParams) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.header(PARAMS_MAGIC, params);
    w.0
}

pub fn params_from_bytes(buf: &[u8]) -> Result<FvParams> {
    let mut r = Reader { buf, pos: 0 };
    let p = r.header(PARAMS_MAGIC)?;
    r.finish()?;
    Ok(p)
}

pub fn ciphertext_to_bytes(ctx: &FvContext, ct: &Ciphertext) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.header(CT_MAGIC, ctx.params());
    w.u32(ct.level);
    w.u32(ct.parts.len() as u32);
    for p in &ct.parts {
        w.poly(p);
    }
    w.0
}

pub fn ciphertext_from_bytes(ctx: &FvContext, buf: &[u8]) -> Result<Ciphertext> {
    let mut r = Reader { buf, pos: 0 };
    header_for(ctx, &mut r, CT_MAGIC)?;
    let level = r.u32()?;
    let n = r.u32()? as usize;
    if !(2..=3).contains(&n) {
        return Err(FheError::Format(format!("{n} ciphertext parts")));
    }
    let size = ctx.params().d * ctx.params().moduli.len();
    let parts = (0..n).map(|_| r.poly(size)).collect::<Result<Vec<_>>>()?;
    check_reduced(ctx, &parts)?;
    r.finish()?;
    Ok(Ciphertext {
        parts,
        level,
        fingerprint: ctx.fingerprint(),
    })
}

fn check_reduced(ctx: &FvContext, polys: &[Vec<u64>]) -> Result<()> {
    let d = ctx.params().d;
    for p in polys {
        for (row, &m) in p.chunks(d).zip(&ctx.params().moduli) {
            if row.iter().any(|&x| x >= m) {
                return Err(FheError::Format("residue not reduced".into()));
            }
        }
    }
    Ok(())
}

pub fn secret_key_to_bytes(ctx: &FvContext, sk: &SecretKey) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.header(SK_MAGIC, ctx.params());
    let ternary: Vec<u8> = sk.s.iter().map(|&c| (c + 1) as u8).collect();
    w.bytes(&ternary);
    w.0
}

pub fn secret_key_from_bytes(ctx: &FvContext, buf: &[u8]) -> Result<SecretKey> {
    let mut r = Reader { buf, pos: 0 };
    header_for(ctx, &mut r, SK_MAGIC)?;
    let raw = r.bytes()?;
    r.finish()?;
    if raw.len() != ctx.params().d || raw.iter().any(|&b| b > 2) {
        return Err(FheError::Format("secret key is not a ternary polynomial of length d".into()));
    }
    let s: Vec<i64> = raw.iter().map(|&b| b as i64 - 1).collect();
    Ok(crate::scheme::secret_from_coeffs(ctx, s))
}

pub fn public_key_to_bytes(ctx: &FvContext, pk: &PublicKey) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.header(PK_MAGIC, ctx.params());
    w.poly(&pk.p0);
    w.poly(&pk.p1);
    w.0
}

pub fn public_key_from_bytes(ctx: &FvContext, buf: &[u8]) -> Result<PublicKey> {
    let mut r = Reader { buf, pos: 0 };
    header_for(ctx, &mut r, PK_MAGIC)?;
    let size = ctx.params().d * ctx.params().moduli.len();
    let p0 = r.poly(size)?;
    let p1 = r.poly(size)?;
    r.finish()?;
    check_reduced(ctx, &[p0.clone(), p1.clone()])?;
    Ok(PublicKey {
        p0,
        p1,
        fingerprint: ctx.fingerprint(),
    })
}

pub fn relin_key_to_bytes(ctx: &FvContext, rk: &RelinKey) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.header(RK_MAGIC, ctx.params());
    w.u32(rk.keys.len() as u32);
    for (a, b) in &rk.keys {
        w.poly(a);
        w.poly(b);
    }
    w.0
}

pub fn relin_key_from_bytes(ctx: &FvContext, buf: &[u8]) -> Result<RelinKey> {
    let mut r = Reader { buf, pos: 0 };
    header_for(ctx, &mut r, RK_MAGIC)?;
    let n = r.u32()? as usize;
    if n != ctx.relin_digits() {
        return Err(FheError::Format(format!("{n} relinearization keys, expected {}", ctx.relin_digits())));
    }
    let size = ctx.params().d * ctx.params().moduli.len();
    let mut keys = Vec::with_capacity(n);
    for _ in 0..n {
        let a = r.poly(size)?;
        let b = r.poly(size)?;
        keys.push((a, b));
    }
    r.finish()?;
    for (a, b) in &keys {
        check_reduced(ctx, &[a.clone(), b.clone()])?;
    }
    Ok(RelinKey {
        keys,
        fingerprint: ctx.fingerprint(),
    })
}
