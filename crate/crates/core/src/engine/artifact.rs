//! On-disk container for encrypted datasets, coefficients and predictions:
//! an 8-byte magic, a length-prefixed JSON header, then length-prefixed
//! serialized scalars.

use std::path::Path;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::{EncryptedCoefficients, EncryptedDataset, ScalingState};
use crate::backend::Backend;
use crate::depth::FitPlan;
use crate::error::{ElsError, Result};
use crate::linalg::Matrix;

pub const MAGIC: &[u8; 8] = b"ELSFIT01";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Dataset,
    Coefficients,
    Predictions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub kind: ArtifactKind,
    pub backend: String,
    pub key_id: String,
    pub rows: usize,
    pub cols: usize,
    pub phi: u32,
    #[serde(default)]
    pub plan: Option<FitPlan>,
    #[serde(default)]
    pub scaling: Option<ScalingState>,
    /// Decode divisor of every scalar, as decimal strings.
    #[serde(default)]
    pub scales: Vec<String>,
    #[serde(default)]
    pub depths: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub meta: ArtifactMeta,
    pub blobs: Vec<Vec<u8>>,
}

impl Artifact {
    pub fn to_bytes(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&self.meta).expect("metadata serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.blobs.len() as u32).to_le_bytes());
        for b in &self.blobs {
            out.extend_from_slice(&(b.len() as u64).to_le_bytes());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Artifact> {
        let bad = |m: &str| ElsError::Format(m.to_string());
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let end = pos.checked_add(n).filter(|&e| e <= buf.len()).ok_or_else(|| bad("truncated artifact"))?;
            let s = &buf[pos..end];
            pos = end;
            Ok(s)
        };
        if take(8)? != MAGIC {
            return Err(bad("not an artifact (bad magic)"));
        }
        let meta_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let meta: ArtifactMeta =
            serde_json::from_slice(take(meta_len)?).map_err(|e| ElsError::Format(format!("header: {e}")))?;
        let count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let mut blobs = Vec::with_capacity(count.min(1 << 20));
        for _ in 0..count {
            let len = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
            blobs.push(take(len)?.to_vec());
        }
        if pos != buf.len() {
            return Err(bad("trailing bytes after artifact"));
        }
        Ok(Artifact { meta, blobs })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Artifact> {
        Artifact::from_bytes(&std::fs::read(path)?)
    }

    pub fn check_key<B: Backend>(&self, b: &B) -> Result<()> {
        if self.meta.backend != b.name() || self.meta.key_id != b.key_id() {
            return Err(ElsError::KeyMismatch(format!(
                "artifact belongs to {} key {}, not {} key {}",
                self.meta.backend,
                self.meta.key_id,
                b.name(),
                b.key_id()
            )));
        }
        Ok(())
    }

    pub fn scales(&self) -> Result<Vec<BigInt>> {
        self.meta
            .scales
            .iter()
            .map(|s| s.parse().map_err(|_| ElsError::Format(format!("bad scale {s:?}"))))
            .collect()
    }

    fn scalars<B: Backend>(&self, b: &B, kind: ArtifactKind) -> Result<Vec<B::Scalar>> {
        if self.meta.kind != kind {
            return Err(ElsError::Format(format!("expected a {kind:?} artifact, found {:?}", self.meta.kind)));
        }
        self.check_key(b)?;
        self.blobs.iter().map(|blob| b.scalar_from_bytes(blob)).collect()
    }
}

fn meta<B: Backend>(b: &B, kind: ArtifactKind, rows: usize, cols: usize, phi: u32) -> ArtifactMeta {
    ArtifactMeta {
        kind,
        backend: b.name().into(),
        key_id: b.key_id(),
        rows,
        cols,
        phi,
        plan: None,
        scaling: None,
        scales: Vec::new(),
        depths: Vec::new(),
    }
}

pub fn dataset_artifact<B: Backend>(b: &B, data: &EncryptedDataset<B::Scalar>, phi: u32) -> Artifact {
    let mut blobs: Vec<Vec<u8>> = data.x.data().iter().map(|s| b.scalar_to_bytes(s)).collect();
    blobs.extend(data.y.iter().map(|s| b.scalar_to_bytes(s)));
    Artifact {
        meta: meta(b, ArtifactKind::Dataset, data.n(), data.p(), phi),
        blobs,
    }
}

pub fn load_dataset<B: Backend>(b: &B, a: &Artifact) -> Result<(EncryptedDataset<B::Scalar>, u32)> {
    let mut scalars = a.scalars(b, ArtifactKind::Dataset)?;
    let (n, p) = (a.meta.rows, a.meta.cols);
    if scalars.len() != n * p + n {
        return Err(ElsError::Format(format!("dataset of {n}x{p} holds {} scalars", scalars.len())));
    }
    let y = scalars.split_off(n * p);
    Ok((EncryptedDataset::new(Matrix::new(n, p, scalars), y)?, a.meta.phi))
}

pub fn coefficients_artifact<B: Backend>(
    b: &B,
    coeffs: &EncryptedCoefficients<B::Scalar>,
    plan: &FitPlan,
) -> Artifact {
    let p = coeffs.beta.len();
    let mut m = meta(b, ArtifactKind::Coefficients, p, 1, plan.phi);
    m.plan = Some(plan.clone());
    m.scaling = Some(coeffs.scaling.clone());
    m.scales = (0..p).map(|j| coeffs.scale_of(j).to_string()).collect();
    m.depths = coeffs.beta.iter().map(|s| b.depth(s)).collect();
    Artifact {
        meta: m,
        blobs: coeffs.beta.iter().map(|s| b.scalar_to_bytes(s)).collect(),
    }
}

pub fn load_coefficients<B: Backend>(b: &B, a: &Artifact) -> Result<EncryptedCoefficients<B::Scalar>> {
    let beta = a.scalars(b, ArtifactKind::Coefficients)?;
    let scaling = a
        .meta
        .scaling
        .clone()
        .ok_or_else(|| ElsError::Format("coefficients without scaling metadata".into()))?;
    let scales = a.scales()?;
    if scales.len() != beta.len() {
        return Err(ElsError::Format("one scale per coefficient expected".into()));
    }
    let uniform = scales.iter().all(|s| *s == scaling.scale);
    Ok(EncryptedCoefficients {
        beta,
        scaling,
        per_coordinate_scales: (!uniform).then_some(scales),
    })
}

pub fn predictions_artifact<B: Backend>(
    b: &B,
    preds: &[B::Scalar],
    scale: &BigInt,
    plan: Option<&FitPlan>,
    phi: u32,
) -> Artifact {
    let mut m = meta(b, ArtifactKind::Predictions, preds.len(), 1, phi);
    m.plan = plan.cloned();
    m.scales = vec![scale.to_string(); preds.len()];
    m.depths = preds.iter().map(|s| b.depth(s)).collect();
    Artifact {
        meta: m,
        blobs: preds.iter().map(|s| b.scalar_to_bytes(s)).collect(),
    }
}

pub fn load_predictions<B: Backend>(b: &B, a: &Artifact) -> Result<(Vec<B::Scalar>, Vec<BigInt>)> {
    let preds = a.scalars(b, ArtifactKind::Predictions)?;
    Ok((preds, a.scales()?))
}

/// Serde adapter storing big integers as decimal strings.
pub mod big_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
