//! On-disk layout of generated benchmark data.
//!
//! ```text
//! <root>/samples/<id>/cube_1scan/    meta.json + data.f32
//!                     cube_8scan/
//!                     cube_32scan/
//!                     truth/clean/   clean cube
//!                     truth/mask.json
//! ```
//!
//! A single `synth` run writes one `<sample>` directory; the benchmark
//! consumes the `<root>` with two or more samples.

use std::path::{Path, PathBuf};

use crate::cube::{cube_load, cube_save, mask_load, mask_save, HyperspectralCube};
use crate::error::{Error, Result};
use crate::synth::SynthOutput;

/// Writes one sample directory.
pub fn save_sample(out: &SynthOutput, dir: &Path) -> Result<()> {
    for cube in &out.cubes {
        cube_save(cube, &dir.join(format!("cube_{}scan", cube.scan_count())))?;
    }
    cube_save(&out.clean, &dir.join("truth").join("clean"))?;
    let (h, w) = out.clean.shape();
    mask_save(&out.mask, h, w, &dir.join("truth").join("mask.json"))?;
    Ok(())
}

/// One sample read back from disk.
#[derive(Debug, Clone)]
pub struct LoadedSample {
    pub id: String,
    /// Cubes keyed by scan count, ascending.
    pub cubes: Vec<HyperspectralCube>,
    pub clean: Option<HyperspectralCube>,
    pub mask_truth: Option<Vec<bool>>,
}

impl LoadedSample {
    pub fn cube_for_scans(&self, n: u32) -> Option<&HyperspectralCube> {
        self.cubes.iter().find(|c| c.scan_count() == n)
    }
}

/// Reads one sample directory (every `cube_*scan` subdirectory plus truth
/// data when present).
pub fn load_sample(dir: &Path) -> Result<LoadedSample> {
    let id = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut cubes = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.starts_with("cube_") && name.ends_with("scan") && entry.path().is_dir() {
            cubes.push(cube_load(&entry.path())?);
        }
    }
    if cubes.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "no cube_*scan directories under {}",
            dir.display()
        )));
    }
    cubes.sort_by_key(|c| c.scan_count());
    let truth = dir.join("truth");
    let clean = truth.join("clean").is_dir().then(|| cube_load(&truth.join("clean"))).transpose()?;
    let mask_truth = truth
        .join("mask.json")
        .is_file()
        .then(|| mask_load(&truth.join("mask.json")).map(|m| m.data))
        .transpose()?;
    Ok(LoadedSample {
        id,
        cubes,
        clean,
        mask_truth,
    })
}

/// Sorted sample directories under `<root>/samples`.
pub fn sample_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let samples = root.join("samples");
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&samples)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

/// Loads every sample of a benchmark dataset, sorted by id.
pub fn load_suite(root: &Path) -> Result<Vec<LoadedSample>> {
    sample_dirs(root)?
        .iter()
        .map(|d| load_sample(d))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_cube, SynthConfig};

    #[test]
    fn sample_round_trip() {
        let mut cfg = SynthConfig::bench_sample("t1", 3, false);
        cfg.layout = crate::synth::LayoutSpec {
            height: 6,
            width: 6,
            blob_count: 1,
            blob_radius: 2,
        };
        let out = gen_cube(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let sdir = dir.path().join("samples").join("t1");
        save_sample(&out, &sdir).unwrap();
        let back = load_sample(&sdir).unwrap();
        assert_eq!(back.id, "t1");
        assert_eq!(back.cubes.len(), 3);
        assert_eq!(back.cube_for_scans(8).unwrap().scan_count(), 8);
        assert_eq!(back.mask_truth.as_deref(), Some(&out.mask[..]));
        let suite = load_suite(dir.path()).unwrap();
        assert_eq!(suite.len(), 1);
    }
}
