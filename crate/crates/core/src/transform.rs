//! Normalization stack and its exact inverses.
//!
//! Per-spectrum SNV followed by dataset-level min-max scaling maps spectra
//! into a stable [0, 1] range for filtering and training. The recorded
//! [`NormStats`] are sufficient to invert both steps exactly, which is what
//! the physics bridge does to hand baseline correction physical absorbance
//! units. Nothing is clipped: out-of-range values must survive the round
//! trip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::Spectrum;

/// Which normalization domain a spectrum currently lives in. Tracked at
/// runtime so double-application is a hard error instead of silent
/// corruption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainTag {
    Raw,
    Snv,
    Minmax01,
}

impl std::fmt::Display for DomainTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DomainTag::Raw => "raw",
            DomainTag::Snv => "snv",
            DomainTag::Minmax01 => "minmax01",
        };
        f.write_str(s)
    }
}

/// Normalization state: per-spectrum SNV statistics plus the dataset-level
/// min/max. Parts not yet applied are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snv_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snv_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_max: Option<f64>,
    pub domain_tag: DomainTag,
}

impl NormStats {
    fn snv_parts(&self) -> Result<(f64, f64)> {
        match (self.snv_mean, self.snv_std) {
            (Some(m), Some(s)) => Ok((m, s)),
            _ => Err(Error::MissingStats("snv mean/std not recorded".into())),
        }
    }

    fn minmax_parts(&self) -> Result<(f64, f64)> {
        match (self.global_min, self.global_max) {
            (Some(lo), Some(hi)) => Ok((lo, hi)),
            _ => Err(Error::MissingStats("global min/max not recorded".into())),
        }
    }
}

fn require_domain(found: DomainTag, expected: DomainTag) -> Result<()> {
    if found != expected {
        return Err(Error::DomainTagMismatch {
            expected: expected.to_string(),
            found: found.to_string(),
        });
    }
    Ok(())
}

/// Standard Normal Variate: `(s - mean) / std` with the sample (n-1)
/// standard deviation. Returns the standardized spectrum and the stats
/// needed to invert it.
pub fn snv(s: &Spectrum) -> Result<(Spectrum, NormStats)> {
    let v = s.values();
    if v.len() < 2 {
        return Err(Error::DegenerateSpectrum);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    if std <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let stats = NormStats {
        snv_mean: Some(mean),
        snv_std: Some(std),
        global_min: None,
        global_max: None,
        domain_tag: DomainTag::Snv,
    };
    let out = s
        .map_values(v.iter().map(|x| (x - mean) / std).collect())?
        .with_stats(stats.clone());
    Ok((out, stats))
}

/// Exact inverse of [`snv`]: `s * std + mean`.
pub fn inverse_snv(s: &Spectrum, stats: &NormStats) -> Result<Spectrum> {
    let (mean, std) = stats.snv_parts()?;
    let out = s.map_values(s.values().iter().map(|x| x * std + mean).collect())?;
    Ok(out.with_stats(NormStats {
        domain_tag: DomainTag::Raw,
        ..stats.clone()
    }))
}

/// Global minimum and maximum over every point of every spectrum.
pub fn minmax_fit<'a, I>(dataset: I) -> Result<(f64, f64)>
where
    I: IntoIterator<Item = &'a Spectrum>,
{
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in dataset {
        for &v in s.values() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !(hi > lo) {
        return Err(Error::DegenerateRange { min: lo, max: hi });
    }
    Ok((lo, hi))
}

/// `(s - min) / (max - min)`. Values outside the fitted range are not
/// clipped; the bridge needs exact invertibility.
pub fn minmax_apply(s: &Spectrum, min: f64, max: f64) -> Result<Spectrum> {
    if !(max > min) {
        return Err(Error::DegenerateRange { min, max });
    }
    if let Some(st) = s.stats() {
        if st.domain_tag == DomainTag::Minmax01 {
            return Err(Error::DomainTagMismatch {
                expected: "raw|snv".into(),
                found: "minmax01".into(),
            });
        }
    }
    let span = max - min;
    let out = s.map_values(s.values().iter().map(|x| (x - min) / span).collect())?;
    let base = s.stats().cloned().unwrap_or(NormStats {
        snv_mean: None,
        snv_std: None,
        global_min: None,
        global_max: None,
        domain_tag: DomainTag::Raw,
    });
    Ok(out.with_stats(NormStats {
        global_min: Some(min),
        global_max: Some(max),
        domain_tag: DomainTag::Minmax01,
        ..base
    }))
}

/// Exact inverse of [`minmax_apply`].
pub fn minmax_invert(s: &Spectrum, min: f64, max: f64) -> Result<Spectrum> {
    if !(max > min) {
        return Err(Error::DegenerateRange { min, max });
    }
    let span = max - min;
    let out = s.map_values(s.values().iter().map(|x| x * span + min).collect())?;
    let base = s.stats().cloned().unwrap_or(NormStats {
        snv_mean: None,
        snv_std: None,
        global_min: None,
        global_max: None,
        domain_tag: DomainTag::Raw,
    });
    let tag = if base.snv_mean.is_some() {
        DomainTag::Snv
    } else {
        DomainTag::Raw
    };
    Ok(out.with_stats(NormStats {
        domain_tag: tag,
        ..base
    }))
}

/// The physics bridge inversion: inverse min-max followed by inverse SNV,
/// restoring physical absorbance units. Requires a `minmax01`-domain input
/// and complete stats.
pub fn bridge_invert(s: &Spectrum, stats: &NormStats) -> Result<Spectrum> {
    require_domain(stats.domain_tag, DomainTag::Minmax01)?;
    if let Some(own) = s.stats() {
        require_domain(own.domain_tag, DomainTag::Minmax01)?;
    }
    let (min, max) = stats.minmax_parts()?;
    let snv_dom = minmax_invert(s, min, max)?;
    let out = inverse_snv(&snv_dom, stats)?;
    Ok(out.with_stats(NormStats {
        domain_tag: DomainTag::Raw,
        ..stats.clone()
    }))
}

/// SNV followed by min-max with the given dataset-level range.
pub fn normalize(s: &Spectrum, min: f64, max: f64) -> Result<Spectrum> {
    let (snved, _) = snv(s)?;
    minmax_apply(&snved, min, max)
}
