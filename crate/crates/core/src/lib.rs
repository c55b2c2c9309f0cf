//! Restoration of high-quality vibrational spectra from low-scan
//! acquisitions.
//!
//! Three restoration routes over the same normalized domain:
//!
//! - **traditional**: Savitzky-Golay smoothing, physics-bridge inversion to
//!   absorbance units, SNIP baseline removal;
//! - **single**: one 1D encoder-decoder network mapping noisy inputs with
//!   native baselines straight to baseline-free targets;
//! - **cascade**: a denoising network, a deterministic physics bridge
//!   (inverse normalization + SNIP), and a refinement network.
//!
//! Ground truth comes from a seeded synthetic generator ([`synth`]); the
//! benchmark harness ([`evalbench`]) runs leave-one-sample-out
//! cross-validation with a full metric suite and emits table-shaped
//! reports.

pub mod axis;
pub mod cube;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod evalbench;
pub mod neural;
pub mod pipelines;
pub mod prep;
pub mod rng;
pub mod spectrum;
pub mod synth;
pub mod transform;

pub use axis::WavenumberAxis;
pub use cube::HyperspectralCube;
pub use error::{Error, Result};
pub use spectrum::{integrate_band, Origin, Spectrum};
