//! Scalar reconstruction metrics and summary statistics.

use crate::axis::WavenumberAxis;
use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "metric inputs differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let n = a.len() as f64;
    Ok((a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n).sqrt())
}

/// Mean absolute error.
pub fn mae(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let n = a.len() as f64;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n)
}

/// Spectral angle between `a` and `b` in radians, clamped into [0, pi].
pub fn sam(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0).acos())
}

/// Pearson correlation coefficient.
pub fn pcc(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    if a.len() < 2 {
        return Err(Error::DegenerateVariance);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

/// Average ranks (1-based), ties averaged.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman's rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    check_lengths(a, b)?;
    pcc(&ranks(a), &ranks(b))
}

/// Percentile by linear interpolation between closest ranks; `p` in [0, 100].
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::DegenerateDistribution("empty sample".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Interquartile range (p75 - p25).
pub fn iqr(values: &[f64]) -> Result<f64> {
    Ok(percentile(values, 75.0)? - percentile(values, 25.0)?)
}

/// Noise estimate: sample standard deviation inside the window after
/// removing a linear fit across it (isolates noise from local slope).
pub fn silent_region_noise(s: &Spectrum, window: (f64, f64)) -> Result<f64> {
    silent_region_noise_values(s.values(), s.axis(), window)
}

/// [`silent_region_noise`] on raw values.
pub fn silent_region_noise_values(
    values: &[f64],
    axis: &WavenumberAxis,
    window: (f64, f64),
) -> Result<f64> {
    let idx = axis.indices_in_band(window.0, window.1);
    if idx.len() < 3 {
        return Err(Error::EmptyBand {
            lo: window.0,
            hi: window.1,
        });
    }
    let n = idx.len() as f64;
    let xs: Vec<f64> = idx
        .iter()
        .map(|&i| axis.wavenumber_of(i).unwrap())
        .collect();
    let ys: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let var = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (my + slope * (x - mx));
            r * r
        })
        .sum::<f64>()
        / (n - 1.0);
    Ok(var.sqrt())
}

/// `100 * (1 - e_method / e_raw)`.
pub fn reduction_percent(e_raw: f64, e_method: f64) -> Result<f64> {
    if !(e_raw > 0.0) {
        return Err(Error::ZeroBaselineError);
    }
    Ok(100.0 * (1.0 - e_method / e_raw))
}
