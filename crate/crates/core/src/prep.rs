//! Data preparation: foreground masking, background subtraction, spectral
//! trimming.

use serde::{Deserialize, Serialize};

use crate::axis::WavenumberAxis;
use crate::cube::HyperspectralCube;
use crate::error::{Error, Result};
use crate::spectrum::{integrate_band, Spectrum};

/// Which points to drop: detector edges by count plus wavenumber ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrimSpec {
    /// Points dropped from the low and high ends of the detector axis.
    /// Edge counts describe the raw (uniform) detector axis; an axis that is
    /// already in explicit-point form has had its edges removed, so the
    /// counts are not applied again (this keeps trimming idempotent).
    pub drop_edges: (usize, usize),
    /// Inclusive wavenumber ranges to remove entirely.
    pub drop_ranges: Vec<(f64, f64)>,
}

impl Default for TrimSpec {
    fn default() -> Self {
        Self {
            drop_edges: (10, 10),
            drop_ranges: vec![(2250.0, 2401.0)],
        }
    }
}

/// Otsu threshold over a 256-bin histogram spanning [min, max].
///
/// Returns the bin-edge threshold maximizing between-class variance, ties
/// broken toward the lower threshold. The mask predicate downstream is the
/// strict `value > threshold`.
pub fn otsu_threshold(values: &[f64]) -> Result<f64> {
    const BINS: usize = 256;
    if values.len() < 2 {
        return Err(Error::DegenerateDistribution(format!(
            "need at least 2 values, got {}",
            values.len()
        )));
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateDistribution(
            "all values are equal".into(),
        ));
    }
    let width = (hi - lo) / BINS as f64;
    let mut hist = [0usize; BINS];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(BINS - 1);
        hist[b] += 1;
    }
    let total = values.len() as f64;
    let bin_center = |b: usize| lo + (b as f64 + 0.5) * width;
    let full_sum: f64 = hist
        .iter()
        .enumerate()
        .map(|(b, &c)| c as f64 * bin_center(b))
        .sum();

    let mut best_var = f64::NEG_INFINITY;
    let mut best_k = 1usize;
    let mut w0 = 0.0;
    let mut sum0 = 0.0;
    // threshold candidates are the bin edges k = 1..BINS-1
    for k in 1..BINS {
        w0 += hist[k - 1] as f64;
        sum0 += hist[k - 1] as f64 * bin_center(k - 1);
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (full_sum - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best_k = k;
        }
    }
    Ok(lo + best_k as f64 * width)
}

/// Foreground mask from the Otsu threshold of per-pixel band scores
/// (fingerprint integral + C-H stretching integral).
pub fn foreground_mask(
    cube: &HyperspectralCube,
    fingerprint_band: (f64, f64),
    ch_band: (f64, f64),
) -> Result<Vec<bool>> {
    let (h, w) = cube.shape();
    let mut scores = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let s = cube.spectrum_at(x, y)?;
            let score = integrate_band(&s, fingerprint_band.0, fingerprint_band.1)?
                + integrate_band(&s, ch_band.0, ch_band.1)?;
            scores.push(score);
        }
    }
    let t = otsu_threshold(&scores)?;
    Ok(scores.iter().map(|&s| s > t).collect())
}

/// Subtracts the mean background spectrum (mask = false pixels) from every
/// foreground pixel. Background pixels are left unchanged. The returned cube
/// carries the mask.
pub fn subtract_background(cube: &HyperspectralCube, mask: &[bool]) -> Result<HyperspectralCube> {
    let (h, w) = cube.shape();
    if mask.len() != h * w {
        return Err(Error::ShapeMismatch(format!(
            "mask length {} != {}x{}",
            mask.len(),
            h,
            w
        )));
    }
    let n_bg = mask.iter().filter(|m| !**m).count();
    if n_bg == 0 {
        return Err(Error::NoBackgroundPixels);
    }
    if n_bg == mask.len() {
        return Err(Error::NoForegroundPixels);
    }
    let l = cube.axis().len();
    let mut bg = vec![0.0; l];
    for (p, _) in mask.iter().enumerate().filter(|(_, m)| !**m) {
        let (x, y) = (p % w, p / w);
        for (acc, v) in bg.iter_mut().zip(cube.pixel(x, y)) {
            *acc += v;
        }
    }
    for v in bg.iter_mut() {
        *v /= n_bg as f64;
    }

    let mut data = cube.data().to_vec();
    for (p, _) in mask.iter().enumerate().filter(|(_, m)| **m) {
        let off = p * l;
        for (i, b) in bg.iter().enumerate() {
            data[off + i] -= b;
        }
    }
    HyperspectralCube::new(
        h,
        w,
        cube.axis().clone(),
        data,
        cube.sample_id(),
        cube.scan_count(),
    )?
    .with_mask(mask.to_vec())
}

/// Mean background spectrum over mask = false pixels.
pub fn background_spectrum(cube: &HyperspectralCube, mask: &[bool]) -> Result<Spectrum> {
    let (_, w) = cube.shape();
    let n_bg = mask.iter().filter(|m| !**m).count();
    if n_bg == 0 {
        return Err(Error::NoBackgroundPixels);
    }
    let l = cube.axis().len();
    let mut bg = vec![0.0; l];
    for (p, _) in mask.iter().enumerate().filter(|(_, m)| !**m) {
        let (x, y) = (p % w, p / w);
        for (acc, v) in bg.iter_mut().zip(cube.pixel(x, y)) {
            *acc += v;
        }
    }
    for v in bg.iter_mut() {
        *v /= n_bg as f64;
    }
    Spectrum::new(bg, cube.axis().clone(), cube.scan_count())
}

/// Indices kept by `spec` on `axis`, ascending.
fn kept_indices(axis: &WavenumberAxis, spec: &TrimSpec) -> Result<Vec<usize>> {
    let n = axis.len();
    let (lo_edge, hi_edge) = if axis.is_uniform() {
        spec.drop_edges
    } else {
        (0, 0)
    };
    if lo_edge + hi_edge >= n {
        return Err(Error::EmptyAfterTrim);
    }
    let kept: Vec<usize> = (lo_edge..(n - hi_edge))
        .filter(|&i| {
            let w = axis.wavenumber_of(i).unwrap();
            !spec
                .drop_ranges
                .iter()
                .any(|&(lo, hi)| w >= lo && w <= hi)
        })
        .collect();
    if kept.len() < 2 {
        return Err(Error::EmptyAfterTrim);
    }
    Ok(kept)
}

/// Removes edge points and drop-range points from a spectrum. The output
/// axis is in explicit-point form; point order is preserved.
pub fn trim_spectrum(s: &Spectrum, spec: &TrimSpec) -> Result<Spectrum> {
    let kept = kept_indices(s.axis(), spec)?;
    let axis = WavenumberAxis::from_points(
        kept.iter()
            .map(|&i| s.axis().wavenumber_of(i).unwrap())
            .collect(),
    )?;
    let values = kept.iter().map(|&i| s.values()[i]).collect();
    let mut out = Spectrum::new(values, std::sync::Arc::new(axis), s.scan_count())?;
    if let Some(o) = s.origin() {
        out = out.with_origin(o.clone());
    }
    if let Some(st) = s.stats() {
        out = out.with_stats(st.clone());
    }
    Ok(out)
}

/// [`trim_spectrum`] applied to every pixel of a cube.
pub fn trim_cube(cube: &HyperspectralCube, spec: &TrimSpec) -> Result<HyperspectralCube> {
    let kept = kept_indices(cube.axis(), spec)?;
    let axis = std::sync::Arc::new(WavenumberAxis::from_points(
        kept.iter()
            .map(|&i| cube.axis().wavenumber_of(i).unwrap())
            .collect(),
    )?);
    let (h, w) = cube.shape();
    let l = cube.axis().len();
    let mut data = Vec::with_capacity(h * w * kept.len());
    for p in 0..(h * w) {
        let src = &cube.data()[p * l..(p + 1) * l];
        data.extend(kept.iter().map(|&i| src[i]));
    }
    let out = HyperspectralCube::new(h, w, axis, data, cube.sample_id(), cube.scan_count())?;
    match cube.mask() {
        Some(m) => out.with_mask(m.to_vec()),
        None => Ok(out),
    }
}
