//! Hyperspectral cube container and its on-disk directory format.
//!
//! A cube directory holds `meta.json` (format version, spatial shape, axis,
//! scan count, sample id) and `data.f32` (little-endian float32, C-order
//! over (y, x, lambda)). Values are f64 in memory, f32 on disk.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::axis::WavenumberAxis;
use crate::error::{Error, Result};
use crate::spectrum::{Origin, Spectrum};

pub const FORMAT_VERSION: u32 = 1;

/// H x W grid of spectra sharing one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperspectralCube {
    height: usize,
    width: usize,
    axis: Arc<WavenumberAxis>,
    /// C-order over (y, x, lambda); length = H * W * L.
    data: Vec<f64>,
    mask: Option<Vec<bool>>,
    sample_id: String,
    scan_count: u32,
}

impl HyperspectralCube {
    pub fn new(
        height: usize,
        width: usize,
        axis: Arc<WavenumberAxis>,
        data: Vec<f64>,
        sample_id: impl Into<String>,
        scan_count: u32,
    ) -> Result<Self> {
        if data.len() != height * width * axis.len() {
            return Err(Error::ShapeMismatch(format!(
                "data length {} != {}x{}x{}",
                data.len(),
                height,
                width,
                axis.len()
            )));
        }
        Ok(Self {
            height,
            width,
            axis,
            data,
            mask: None,
            sample_id: sample_id.into(),
            scan_count,
        })
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.height * self.width {
            return Err(Error::ShapeMismatch(format!(
                "mask length {} != {}x{}",
                mask.len(),
                self.height,
                self.width
            )));
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn n_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn axis(&self) -> &Arc<WavenumberAxis> {
        &self.axis
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn sample_id(&self) -> &str {
        &self.sample_id
    }

    pub fn scan_count(&self) -> u32 {
        self.scan_count
    }

    /// Values of pixel (x, y), row-major pixel index y * W + x.
    pub fn pixel(&self, x: usize, y: usize) -> &[f64] {
        let l = self.axis.len();
        let p = (y * self.width + x) * l;
        &self.data[p..p + l]
    }

    /// Pixel as a [`Spectrum`] carrying its provenance.
    pub fn spectrum_at(&self, x: usize, y: usize) -> Result<Spectrum> {
        Ok(Spectrum::new(
            self.pixel(x, y).to_vec(),
            self.axis.clone(),
            self.scan_count,
        )?
        .with_origin(Origin {
            sample_id: self.sample_id.clone(),
            x,
            y,
        }))
    }

    /// Row-major (x, y) pairs where the mask is true. Empty if no mask.
    pub fn foreground_pixels(&self) -> Vec<(usize, usize)> {
        match &self.mask {
            None => Vec::new(),
            Some(m) => (0..self.height)
                .flat_map(|y| (0..self.width).map(move |x| (x, y)))
                .filter(|&(x, y)| m[y * self.width + x])
                .collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CubeMeta {
    format_version: u32,
    shape: [usize; 2],
    axis: AxisMeta,
    scan_count: u32,
    sample_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum AxisMeta {
    Uniform { start: f64, step: f64, n: usize },
    Explicit { points: Vec<f64> },
}

impl From<&WavenumberAxis> for AxisMeta {
    fn from(ax: &WavenumberAxis) -> Self {
        if ax.is_uniform() {
            AxisMeta::Uniform {
                start: ax.start_cm(),
                step: ax.step_cm().unwrap(),
                n: ax.len(),
            }
        } else {
            AxisMeta::Explicit { points: ax.to_points() }
        }
    }
}

impl AxisMeta {
    fn into_axis(self) -> Result<WavenumberAxis> {
        match self {
            AxisMeta::Uniform { start, step, n } => WavenumberAxis::from_start_step(start, step, n),
            AxisMeta::Explicit { points } => WavenumberAxis::from_points(points),
        }
    }
}

/// Writes `meta.json` + `data.f32` into `dir` (created if missing).
pub fn cube_save(cube: &HyperspectralCube, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let meta = CubeMeta {
        format_version: FORMAT_VERSION,
        shape: [cube.height, cube.width],
        axis: AxisMeta::from(cube.axis.as_ref()),
        scan_count: cube.scan_count,
        sample_id: cube.sample_id.clone(),
    };
    std::fs::write(dir.join("meta.json"), serde_json::to_vec_pretty(&meta)?)?;
    let mut bytes = Vec::with_capacity(cube.data.len() * 4);
    for &v in &cube.data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    std::fs::write(dir.join("data.f32"), bytes)?;
    Ok(())
}

/// Loads a cube directory written by [`cube_save`].
pub fn cube_load(dir: &Path) -> Result<HyperspectralCube> {
    let meta: CubeMeta = serde_json::from_slice(&std::fs::read(dir.join("meta.json"))?)?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch {
            found: meta.format_version,
            expected: FORMAT_VERSION,
        });
    }
    let axis = Arc::new(meta.axis.into_axis()?);
    let [h, w] = meta.shape;
    let payload = std::fs::read(dir.join("data.f32"))?;
    let expected = h * w * axis.len() * 4;
    if payload.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "payload is {} bytes, metadata implies {}",
            payload.len(),
            expected
        )));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    HyperspectralCube::new(h, w, axis, data, meta.sample_id, meta.scan_count)
}

/// Boolean mask sidecar (`mask.json`), shaped like the cube grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskFile {
    pub shape: [usize; 2],
    pub data: Vec<bool>,
}

pub fn mask_save(mask: &[bool], height: usize, width: usize, path: &Path) -> Result<()> {
    if mask.len() != height * width {
        return Err(Error::ShapeMismatch(format!(
            "mask length {} != {}x{}",
            mask.len(),
            height,
            width
        )));
    }
    let f = MaskFile {
        shape: [height, width],
        data: mask.to_vec(),
    };
    std::fs::write(path, serde_json::to_vec(&f)?)?;
    Ok(())
}

pub fn mask_load(path: &Path) -> Result<MaskFile> {
    let f: MaskFile = serde_json::from_slice(&std::fs::read(path)?)?;
    if f.data.len() != f.shape[0] * f.shape[1] {
        return Err(Error::ShapeMismatch(format!(
            "mask length {} != {}x{}",
            f.data.len(),
            f.shape[0],
            f.shape[1]
        )));
    }
    Ok(f)
}
