//! Browser playground for the spectral toolkit: synthesize a noisy
//! low-scan spectrum, explore SNIP baseline clipping, and tune
//! Savitzky-Golay smoothing, all against the same seeded ground truth.

use wasm_bindgen::prelude::*;

use lowscan::axis::WavenumberAxis;
use lowscan::dsp::{sg_smooth_values, snip_baseline_values, SgParams, SnipParams};
use lowscan::evalbench::{rmse, silent_region_noise_values};
use lowscan::spectrum::Spectrum;
use lowscan::synth::{
    gen_clean, simulate_scans, BaselineModel, DriftModel, PeakModel, PeakShape, ScanRngs,
};
use std::sync::Arc;

fn err_js(e: lowscan::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// One seeded synthetic scene: a fixed clean spectrum and baseline on a
/// fixed axis, plus simulation and filtering entry points.
#[wasm_bindgen]
pub struct SpectrumLab {
    axis: Arc<WavenumberAxis>,
    clean: Spectrum,
    baseline: BaselineModel,
    seed: u32,
}

#[wasm_bindgen]
impl SpectrumLab {
    /// Builds the scene for a seed. The peak set is drawn from the seed;
    /// the axis spans 950..4000 cm^-1 with 512 points.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<SpectrumLab, JsValue> {
        use rand::Rng;
        let axis = Arc::new(WavenumberAxis::make_axis(950.0, 4000.0, 512).map_err(err_js)?);
        let mut rng = lowscan::rng::stream_rng(seed as u64, lowscan::rng::StreamId::Layout, 7);
        let mut peaks = Vec::new();
        for _ in 0..rng.random_range(4..=6) {
            peaks.push(PeakModel {
                center_cm: rng.random_range(1020.0..1780.0),
                height: rng.random_range(0.3..1.0),
                width_cm: rng.random_range(20.0..55.0),
                shape: if rng.random_bool(0.5) {
                    PeakShape::Gaussian
                } else {
                    PeakShape::Lorentzian
                },
            });
        }
        for _ in 0..2 {
            peaks.push(PeakModel {
                center_cm: rng.random_range(2830.0..2980.0),
                height: rng.random_range(0.3..0.8),
                width_cm: rng.random_range(20.0..40.0),
                shape: PeakShape::Gaussian,
            });
        }
        let clean = gen_clean(&peaks, &axis).map_err(err_js)?;
        let baseline = BaselineModel::Sum {
            parts: vec![
                BaselineModel::Polynomial {
                    coeffs: vec![0.35, 0.18, 0.12],
                    scale: 0.38,
                },
                BaselineModel::Sigmoid {
                    amplitude: 0.08,
                    center_cm: 2600.0,
                    width_cm: 500.0,
                },
            ],
        };
        Ok(SpectrumLab {
            axis,
            clean,
            baseline,
            seed,
        })
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        self.axis.to_points()
    }

    /// Clean signal without baseline or noise.
    pub fn clean(&self) -> Vec<f64> {
        self.clean.values().to_vec()
    }

    /// Clean signal plus the scattering baseline.
    pub fn clean_with_baseline(&self) -> Vec<f64> {
        let b = self.baseline.eval(&self.axis);
        self.clean
            .values()
            .iter()
            .zip(b)
            .map(|(v, bb)| v + bb)
            .collect()
    }

    /// Mean of `scans` noisy acquisitions (noise sigma per scan, optional
    /// non-averageable drift).
    pub fn simulate(&self, sigma: f64, scans: u32, drift: bool) -> Result<Vec<f64>, JsValue> {
        let drift_model = drift.then(|| {
            let mut d = DriftModel::atmospheric_preset();
            d.amplitude *= 4.0; // exaggerated so the effect is visible
            d
        });
        let mut rngs = ScanRngs::for_pixel(self.seed as u64, scans, 0, 0);
        let s = simulate_scans(
            &self.clean,
            &self.baseline,
            sigma,
            scans.max(1),
            drift_model.as_ref(),
            &mut rngs,
        )
        .map_err(err_js)?;
        Ok(s.values().to_vec())
    }

    /// SNIP baseline estimate of `values`.
    pub fn snip_baseline(
        &self,
        values: &[f64],
        iterations: usize,
        decreasing: bool,
        lls: bool,
    ) -> Result<Vec<f64>, JsValue> {
        let p = SnipParams {
            iterations: iterations.max(1),
            decreasing_window: decreasing,
            lls_transform: lls,
        };
        snip_baseline_values(values, p).map_err(err_js)
    }

    /// Savitzky-Golay smoothing of `values`.
    pub fn sg_smooth(
        &self,
        values: &[f64],
        window: usize,
        order: usize,
    ) -> Result<Vec<f64>, JsValue> {
        let p = SgParams::new(window, order).map_err(err_js)?;
        sg_smooth_values(values, p).map_err(err_js)
    }

    /// Detrended standard deviation inside the CO2 silent window.
    pub fn silent_noise(&self, values: &[f64]) -> Result<f64, JsValue> {
        silent_region_noise_values(values, &self.axis, (2250.0, 2401.0)).map_err(err_js)
    }

    /// RMSE against the clean + baseline reference.
    pub fn rmse_vs_reference(&self, values: &[f64]) -> Result<f64, JsValue> {
        rmse(values, &self.clean_with_baseline()).map_err(err_js)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lab_is_seed_deterministic() {
        let a = SpectrumLab::new(5).unwrap();
        let b = SpectrumLab::new(5).unwrap();
        assert_eq!(a.clean(), b.clean());
        assert_eq!(
            a.simulate(0.05, 8, true).unwrap(),
            b.simulate(0.05, 8, true).unwrap()
        );
        let c = SpectrumLab::new(6).unwrap();
        assert_ne!(a.clean(), c.clean());
    }

    #[test]
    fn averaging_reduces_silent_noise() {
        let lab = SpectrumLab::new(1).unwrap();
        let one = lab.simulate(0.05, 1, false).unwrap();
        let many = lab.simulate(0.05, 32, false).unwrap();
        let n1 = lab.silent_noise(&one).unwrap();
        let n32 = lab.silent_noise(&many).unwrap();
        assert!(n32 < n1 / 3.0, "n1 {n1} n32 {n32}");
    }

    #[test]
    fn snip_and_sg_round_through() {
        let lab = SpectrumLab::new(2).unwrap();
        let noisy = lab.simulate(0.05, 8, false).unwrap();
        let base = lab.snip_baseline(&noisy, 40, true, true).unwrap();
        assert_eq!(base.len(), noisy.len());
        let smooth = lab.sg_smooth(&noisy, 9, 3).unwrap();
        assert_eq!(smooth.len(), noisy.len());
    }
}
