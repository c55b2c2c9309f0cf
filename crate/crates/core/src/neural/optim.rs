//! Adadelta parameter updates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::unet::ModelParams;

/// Per-parameter accumulators `E[g^2]` and `E[dx^2]` plus hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimState {
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    pub eg2: Vec<Vec<f64>>,
    pub edx2: Vec<Vec<f64>>,
}

impl OptimState {
    /// lr 0.05, rho 0.95, eps 1e-6; accumulators zeroed to the parameter
    /// shapes.
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Vec<f64>> = params.tensors.iter().map(|t| vec![0.0; t.data.len()]).collect();
        Self {
            lr: 0.05,
            rho: 0.95,
            eps: 1e-6,
            eg2: zeros.clone(),
            edx2: zeros,
        }
    }
}

/// One Adadelta step:
/// `E[g²] ← ρE[g²] + (1−ρ)g²`,
/// `Δ = −lr · sqrt(E[Δx²]+ε) / sqrt(E[g²]+ε) · g`,
/// `E[Δx²] ← ρE[Δx²] + (1−ρ)Δ²`, `params += Δ`.
pub fn adadelta_step(
    params: &mut ModelParams,
    grads: &[Vec<f64>],
    state: &mut OptimState,
) -> Result<()> {
    if grads.len() != params.tensors.len()
        || state.eg2.len() != params.tensors.len()
        || grads
            .iter()
            .zip(&params.tensors)
            .any(|(g, t)| g.len() != t.data.len())
    {
        return Err(Error::ShapeMismatch(
            "gradient/state shapes do not mirror parameters".into(),
        ));
    }
    let (rho, lr, eps) = (state.rho, state.lr, state.eps);
    for (ti, t) in params.tensors.iter_mut().enumerate() {
        let g = &grads[ti];
        let eg2 = &mut state.eg2[ti];
        let edx2 = &mut state.edx2[ti];
        for i in 0..t.data.len() {
            let gi = g[i];
            eg2[i] = rho * eg2[i] + (1.0 - rho) * gi * gi;
            let dx = -lr * ((edx2[i] + eps).sqrt() / (eg2[i] + eps).sqrt()) * gi;
            edx2[i] = rho * edx2[i] + (1.0 - rho) * dx * dx;
            t.data[i] += dx;
        }
    }
    Ok(())
}
