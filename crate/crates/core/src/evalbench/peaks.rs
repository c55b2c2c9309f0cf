//! Peak detection and peak-aware error metrics.

use serde::{Deserialize, Serialize};

use crate::axis::WavenumberAxis;
use crate::error::{Error, Result};

/// Detection parameters, recorded in every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakDetectParams {
    /// Minimum prominence as a fraction of the spectrum's value range.
    pub prominence_frac: f64,
    /// Peaks closer than this keep only the taller one.
    pub min_sep_cm: f64,
}

impl Default for PeakDetectParams {
    fn default() -> Self {
        Self {
            prominence_frac: 0.05,
            min_sep_cm: 8.0,
        }
    }
}

/// Prominence of the strict local maximum at `i`: height above the higher
/// of the two flanking minima, each taken down to the nearer taller
/// neighbor (or the spectrum edge).
fn prominence(values: &[f64], i: usize) -> f64 {
    let peak = values[i];
    let mut left_min = peak;
    for j in (0..i).rev() {
        if values[j] > peak {
            break;
        }
        left_min = left_min.min(values[j]);
    }
    let mut right_min = peak;
    for &v in &values[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Strict local maxima filtered by prominence and minimum separation.
/// Returns ascending indices; may be empty.
pub fn detect_peaks(
    values: &[f64],
    axis: &WavenumberAxis,
    params: PeakDetectParams,
) -> Vec<usize> {
    if values.len() < 3 {
        return Vec::new();
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_prom = params.prominence_frac * (hi - lo);

    let candidates: Vec<usize> = (1..values.len() - 1)
        .filter(|&i| values[i] > values[i - 1] && values[i] > values[i + 1])
        .filter(|&i| prominence(values, i) >= min_prom)
        .collect();

    // suppression: tallest first (ties to the lower index), keep if no
    // kept peak is closer than min_sep_cm
    let mut order = candidates.clone();
    order.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let wi = axis.wavenumber_of(i).unwrap();
        let clash = kept.iter().any(|&k| {
            (axis.wavenumber_of(k).unwrap() - wi).abs() < params.min_sep_cm
        });
        if !clash {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

/// Result of matching predicted peaks to truth peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakMatchReport {
    /// |wavenumber shift| per matched truth peak, in cm^-1.
    pub errors_cm: Vec<f64>,
    /// (pred index, truth index) pairs, in match order.
    pub matches: Vec<(usize, usize)>,
    /// Predicted peaks with no truth partner.
    pub hallucinated: usize,
    /// Truth peaks with no predicted partner.
    pub missed: usize,
}

/// Greedy nearest-distance matching of predicted to truth peaks within
/// `match_window_cm`; each predicted peak is used at most once.
pub fn peak_position_error(
    pred_peaks: &[usize],
    truth_peaks: &[usize],
    axis: &WavenumberAxis,
    match_window_cm: f64,
) -> PeakMatchReport {
    let w = |i: usize| axis.wavenumber_of(i).unwrap();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (ti, &t) in truth_peaks.iter().enumerate() {
        for (pi, &p) in pred_peaks.iter().enumerate() {
            let d = (w(t) - w(p)).abs();
            if d <= match_window_cm {
                pairs.push((d, ti, pi));
            }
        }
    }
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut truth_used = vec![false; truth_peaks.len()];
    let mut pred_used = vec![false; pred_peaks.len()];
    let mut matches = Vec::new();
    let mut errors = Vec::new();
    for (d, ti, pi) in pairs {
        if !truth_used[ti] && !pred_used[pi] {
            truth_used[ti] = true;
            pred_used[pi] = true;
            matches.push((pred_peaks[pi], truth_peaks[ti]));
            errors.push(d);
        }
    }
    PeakMatchReport {
        errors_cm: errors,
        matches,
        hallucinated: pred_used.iter().filter(|u| !**u).count(),
        missed: truth_used.iter().filter(|u| !**u).count(),
    }
}

/// Signed height errors `(pred - truth)` over matched peak pairs, in the
/// shared normalized domain.
pub fn peak_height_bias(
    pred_values: &[f64],
    truth_values: &[f64],
    matches: &[(usize, usize)],
) -> Result<Vec<f64>> {
    if matches.is_empty() {
        return Err(Error::NoMatches);
    }
    Ok(matches
        .iter()
        .map(|&(p, t)| pred_values[p] - truth_values[t])
        .collect())
}
