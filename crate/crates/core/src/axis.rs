//! Wavenumber axis arithmetic.
//!
//! An axis is either uniform (start, step, count) or an explicit strictly
//! increasing point list. Trimming produces explicit axes; uniform index
//! arithmetic is refused on them so nothing silently indexes across a
//! removed gap.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Uniform { start_cm: f64, step_cm: f64, n_points: usize },
    Explicit(Vec<f64>),
}

/// Spectral axis in wavenumbers (cm^-1).
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberAxis {
    repr: Repr,
}

impl WavenumberAxis {
    /// Uniform axis covering `[start_cm, end_cm]` inclusive with `n_points`
    /// equally spaced points.
    pub fn make_axis(start_cm: f64, end_cm: f64, n_points: usize) -> Result<Self> {
        if !(end_cm > start_cm) {
            return Err(Error::NonPositiveSpan {
                start: start_cm,
                end: end_cm,
            });
        }
        if n_points < 2 {
            return Err(Error::TooFewPoints(n_points));
        }
        Ok(Self {
            repr: Repr::Uniform {
                start_cm,
                step_cm: (end_cm - start_cm) / (n_points - 1) as f64,
                n_points,
            },
        })
    }

    /// Uniform axis from (start, step, count) as stored in cube metadata.
    pub fn from_start_step(start_cm: f64, step_cm: f64, n_points: usize) -> Result<Self> {
        if !(step_cm > 0.0) {
            return Err(Error::NonPositiveSpan {
                start: start_cm,
                end: start_cm + step_cm * (n_points.max(1) - 1) as f64,
            });
        }
        if n_points < 2 {
            return Err(Error::TooFewPoints(n_points));
        }
        Ok(Self {
            repr: Repr::Uniform { start_cm, step_cm, n_points },
        })
    }

    /// Axis from an explicit strictly increasing point list.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::TooFewPoints(points.len()));
        }
        for i in 1..points.len() {
            if !(points[i] > points[i - 1]) {
                return Err(Error::NotMonotonic(i));
            }
        }
        Ok(Self {
            repr: Repr::Explicit(points),
        })
    }

    pub fn len(&self) -> usize {
        match &self.repr {
            Repr::Uniform { n_points, .. } => *n_points,
            Repr::Explicit(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.repr, Repr::Uniform { .. })
    }

    /// Grid spacing; `None` for explicit-point axes.
    pub fn step_cm(&self) -> Option<f64> {
        match &self.repr {
            Repr::Uniform { step_cm, .. } => Some(*step_cm),
            Repr::Explicit(_) => None,
        }
    }

    /// Smallest spacing between adjacent points, defined on both forms.
    pub fn min_step_cm(&self) -> f64 {
        match &self.repr {
            Repr::Uniform { step_cm, .. } => *step_cm,
            Repr::Explicit(p) => p
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn start_cm(&self) -> f64 {
        match &self.repr {
            Repr::Uniform { start_cm, .. } => *start_cm,
            Repr::Explicit(p) => p[0],
        }
    }

    pub fn end_cm(&self) -> f64 {
        self.wavenumber_of(self.len() - 1).unwrap()
    }

    /// Wavenumber of point `i`.
    pub fn wavenumber_of(&self, i: usize) -> Result<f64> {
        if i >= self.len() {
            return Err(Error::IndexOutOfBounds {
                index: i,
                n_points: self.len(),
            });
        }
        Ok(match &self.repr {
            Repr::Uniform { start_cm, step_cm, .. } => start_cm + i as f64 * step_cm,
            Repr::Explicit(p) => p[i],
        })
    }

    /// Index of the grid point at wavenumber `w` (uniform axes only).
    pub fn index_of(&self, w: f64) -> Result<usize> {
        let Repr::Uniform { start_cm, step_cm, n_points } = &self.repr else {
            return Err(Error::NonUniformAxis);
        };
        let i = ((w - start_cm) / step_cm).round();
        if i < 0.0 || i >= *n_points as f64 {
            return Err(Error::IndexOutOfBounds {
                index: i.max(0.0) as usize,
                n_points: *n_points,
            });
        }
        Ok(i as usize)
    }

    /// All wavenumbers, materialized.
    pub fn to_points(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Uniform { start_cm, step_cm, n_points } => (0..*n_points)
                .map(|i| start_cm + i as f64 * step_cm)
                .collect(),
            Repr::Explicit(p) => p.clone(),
        }
    }

    /// Indices whose wavenumber lies in `[lo_cm, hi_cm]`, ascending.
    /// Works on both axis forms by scanning.
    pub fn indices_in_band(&self, lo_cm: f64, hi_cm: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                let w = self.wavenumber_of(i).unwrap();
                w >= lo_cm && w <= hi_cm
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_axis_uniform_grid() {
        let ax = WavenumberAxis::make_axis(0.0, 10.0, 11).unwrap();
        assert_eq!(ax.step_cm(), Some(1.0));
        assert_eq!(ax.len(), 11);
        assert_eq!(ax.wavenumber_of(10).unwrap(), 10.0);
    }

    #[test]
    fn make_axis_default_spectral_grid() {
        // (4000 - 950) / 1583
        let ax = WavenumberAxis::make_axis(950.0, 4000.0, 1584).unwrap();
        let step = ax.step_cm().unwrap();
        assert!((step - 1.926721415034744).abs() < 1e-12, "step {step}");
        assert!((ax.end_cm() - 4000.0).abs() < 1e-9);
    }

    #[test]
    fn make_axis_rejects_inverted_span() {
        assert!(matches!(
            WavenumberAxis::make_axis(4000.0, 950.0, 10),
            Err(Error::NonPositiveSpan { .. })
        ));
        assert!(matches!(
            WavenumberAxis::make_axis(1.0, 1.0, 10),
            Err(Error::NonPositiveSpan { .. })
        ));
    }

    #[test]
    fn make_axis_rejects_single_point() {
        assert!(matches!(
            WavenumberAxis::make_axis(0.0, 1.0, 1),
            Err(Error::TooFewPoints(1))
        ));
    }

    #[test]
    fn index_round_trip_on_uniform_axes() {
        let ax = WavenumberAxis::make_axis(950.0, 4000.0, 1584).unwrap();
        for i in [0usize, 1, 700, 1583] {
            let w = ax.wavenumber_of(i).unwrap();
            assert_eq!(ax.index_of(w).unwrap(), i);
        }
    }

    #[test]
    fn explicit_axis_refuses_uniform_arithmetic() {
        let ax = WavenumberAxis::from_points(vec![1.0, 2.0, 4.0]).unwrap();
        assert!(!ax.is_uniform());
        assert!(matches!(ax.index_of(2.0), Err(Error::NonUniformAxis)));
        assert_eq!(ax.step_cm(), None);
        assert_eq!(ax.min_step_cm(), 1.0);
    }

    #[test]
    fn explicit_axis_checks_monotonicity() {
        assert!(matches!(
            WavenumberAxis::from_points(vec![1.0, 3.0, 2.0]),
            Err(Error::NotMonotonic(2))
        ));
        assert!(matches!(
            WavenumberAxis::from_points(vec![1.0, 1.0]),
            Err(Error::NotMonotonic(1))
        ));
    }

    #[test]
    fn band_indices_scan_both_forms() {
        let ax = WavenumberAxis::make_axis(0.0, 10.0, 11).unwrap();
        assert_eq!(ax.indices_in_band(2.5, 5.0), vec![3, 4, 5]);
        let ex = WavenumberAxis::from_points(vec![0.0, 2.0, 6.0, 9.0]).unwrap();
        assert_eq!(ex.indices_in_band(1.0, 8.0), vec![1, 2]);
    }
}
