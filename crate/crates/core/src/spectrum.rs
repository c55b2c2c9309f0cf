//! Absorbance spectra bound to a wavenumber axis.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use crate::axis::WavenumberAxis;
use crate::error::{Error, Result};
use crate::transform::NormStats;

/// Pixel provenance of a spectrum.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub struct Origin {
    pub sample_id: String,
    pub x: usize,
    pub y: usize,
}

/// One absorbance trace. Immutable after construction; all values finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    axis: Arc<WavenumberAxis>,
    scan_count: u32,
    origin: Option<Origin>,
    stats: Option<NormStats>,
}

impl Spectrum {
    pub fn new(values: Vec<f64>, axis: Arc<WavenumberAxis>, scan_count: u32) -> Result<Self> {
        if values.len() != axis.len() {
            return Err(Error::LengthMismatch {
                values: values.len(),
                axis: axis.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        Ok(Self {
            values,
            axis,
            scan_count: scan_count.max(1),
            origin: None,
            stats: None,
        })
    }

    pub fn with_origin(mut self, origin: Origin) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn with_stats(mut self, stats: NormStats) -> Self {
        self.stats = Some(stats);
        self
    }

    /// Same axis and provenance, new values (validated).
    pub fn map_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut out = Spectrum::new(values, self.axis.clone(), self.scan_count)?;
        out.origin = self.origin.clone();
        out.stats = self.stats.clone();
        Ok(out)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn axis(&self) -> &Arc<WavenumberAxis> {
        &self.axis
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scan_count(&self) -> u32 {
        self.scan_count
    }

    pub fn origin(&self) -> Option<&Origin> {
        self.origin.as_ref()
    }

    pub fn stats(&self) -> Option<&NormStats> {
        self.stats.as_ref()
    }

    /// Two-column CSV with a `wavenumber_cm,value` header row.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "wavenumber_cm,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(f, "{},{}", self.axis.wavenumber_of(i)?, v)?;
        }
        Ok(())
    }

    /// Reads the CSV written by [`Spectrum::save_csv`]. The axis comes back
    /// in explicit-point form.
    pub fn load_csv(path: &Path) -> Result<Self> {
        let f = BufReader::new(std::fs::File::open(path)?);
        let mut lines = f.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != "wavenumber_cm,value" {
            return Err(Error::ShapeMismatch(format!(
                "expected header 'wavenumber_cm,value', found '{header}'"
            )));
        }
        let mut points = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (w, v) = line.split_once(',').ok_or_else(|| {
                Error::ShapeMismatch(format!("expected two comma-separated columns: '{line}'"))
            })?;
            points.push(w.trim().parse::<f64>().map_err(|e| {
                Error::ShapeMismatch(format!("bad wavenumber '{w}': {e}"))
            })?);
            values.push(v.trim().parse::<f64>().map_err(|e| {
                Error::ShapeMismatch(format!("bad value '{v}': {e}"))
            })?);
        }
        let axis = Arc::new(WavenumberAxis::from_points(points)?);
        Spectrum::new(values, axis, 1)
    }
}

/// Trapezoidal integral of `s` over the axis points inside `[lo_cm, hi_cm]`.
///
/// Uses the native grid, no resampling; end intervals outside the band are
/// not split.
pub fn integrate_band(s: &Spectrum, lo_cm: f64, hi_cm: f64) -> Result<f64> {
    let idx = s.axis().indices_in_band(lo_cm, hi_cm);
    if idx.is_empty() {
        return Err(Error::EmptyBand { lo: lo_cm, hi: hi_cm });
    }
    let mut acc = 0.0;
    for pair in idx.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        let dw = s.axis().wavenumber_of(j)? - s.axis().wavenumber_of(i)?;
        acc += dw * (s.values()[i] + s.values()[j]) / 2.0;
    }
    Ok(acc)
}
