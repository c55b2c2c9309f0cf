//! Model artifact: `model.json` (config, fingerprint, tensor manifest) plus
//! `weights.f32` (little-endian float32 in manifest order).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::unet::{ModelParams, NamedTensor, UnetConfig};

#[derive(Debug, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: [usize; 3],
    byte_offset: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelMeta {
    config: UnetConfig,
    fingerprint: String,
    manifest: Vec<ManifestEntry>,
}

pub fn model_save(params: &ModelParams, cfg: &UnetConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut manifest = Vec::with_capacity(params.tensors.len());
    let mut bytes = Vec::new();
    for t in &params.tensors {
        manifest.push(ManifestEntry {
            name: t.name.clone(),
            shape: t.dims,
            byte_offset: bytes.len(),
        });
        for &v in &t.data {
            bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    let meta = ModelMeta {
        config: cfg.clone(),
        fingerprint: params.fingerprint.clone(),
        manifest,
    };
    std::fs::write(dir.join("model.json"), serde_json::to_vec_pretty(&meta)?)?;
    std::fs::write(dir.join("weights.f32"), bytes)?;
    Ok(())
}

pub fn model_load(dir: &Path) -> Result<(ModelParams, UnetConfig)> {
    let meta: ModelMeta = serde_json::from_slice(&std::fs::read(dir.join("model.json"))?)?;
    let expect = meta.config.fingerprint();
    if meta.fingerprint != expect {
        return Err(Error::ConfigFingerprintMismatch {
            expected: expect,
            found: meta.fingerprint,
        });
    }
    let bytes = std::fs::read(dir.join("weights.f32"))?;
    let total: usize = meta
        .manifest
        .iter()
        .map(|e| e.shape[0] * e.shape[1] * e.shape[2])
        .sum();
    if bytes.len() != total * 4 {
        return Err(Error::ShapeMismatch(format!(
            "weights.f32 is {} bytes, manifest implies {}",
            bytes.len(),
            total * 4
        )));
    }
    let mut tensors = Vec::with_capacity(meta.manifest.len());
    for e in &meta.manifest {
        let n = e.shape[0] * e.shape[1] * e.shape[2];
        let data = bytes[e.byte_offset..e.byte_offset + n * 4]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        tensors.push(NamedTensor {
            name: e.name.clone(),
            dims: e.shape,
            data,
        });
    }
    Ok((
        ModelParams {
            tensors,
            fingerprint: meta.fingerprint,
        },
        meta.config,
    ))
}
