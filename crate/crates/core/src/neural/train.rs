//! Minibatch training with early stopping and best-weight restoration.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, StreamId};

use super::optim::{adadelta_step, OptimState};
use super::tape::mse;
use super::unet::{build_forward, init_params, unet_forward, ModelParams, UnetConfig};

/// Training protocol parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub patience: usize,
    pub max_epochs: usize,
    pub shuffle_seed: u64,
    /// Fraction of the training set held out for validation when the
    /// caller does not supply an explicit split.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            patience: 30,
            max_epochs: 500,
            shuffle_seed: 0,
            validation_fraction: 0.2,
        }
    }
}

/// Aligned input/target pairs, one spectrum per row; all rows equally long.
#[derive(Debug, Clone, Default)]
pub struct DataSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl DataSet {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn validate(&self) -> Result<usize> {
        if self.is_empty() || self.targets.len() != self.inputs.len() {
            return Err(Error::EmptyDataset);
        }
        let l = self.inputs[0].len();
        if self
            .inputs
            .iter()
            .chain(&self.targets)
            .any(|row| row.len() != l)
        {
            return Err(Error::ShapeMismatch("ragged dataset rows".into()));
        }
        Ok(l)
    }

    /// Deterministic tail split: the last `fraction` of a seeded shuffle
    /// becomes the validation set.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(DataSet, DataSet)> {
        let n = self.validate().map(|_| self.len())?;
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = stream_rng(seed, StreamId::Shuffle, u64::MAX);
        idx.shuffle(&mut rng);
        let n_val = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
        let (train_idx, val_idx) = idx.split_at(n - n_val);
        let pick = |ids: &[usize]| DataSet {
            inputs: ids.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: ids.iter().map(|&i| self.targets[i].clone()).collect(),
        };
        Ok((pick(train_idx), pick(val_idx)))
    }
}

/// Per-epoch record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Mean loss of `params` over a dataset, evaluated in inference batches.
pub fn evaluate(
    params: &ModelParams,
    cfg: &UnetConfig,
    set: &DataSet,
    batch_size: usize,
) -> Result<f64> {
    let l = set.validate()?;
    let mut acc = 0.0;
    let mut count = 0usize;
    for chunk in (0..set.len()).collect::<Vec<_>>().chunks(batch_size.max(1)) {
        let bs = chunk.len();
        let mut input = Vec::with_capacity(bs * l);
        for &i in chunk {
            input.extend_from_slice(&set.inputs[i]);
        }
        let out = unet_forward(params, cfg, [bs, l, 1], input)?;
        for (row, &i) in chunk.iter().enumerate() {
            acc += mse(&out[row * l..(row + 1) * l], &set.targets[i])?;
            count += 1;
        }
    }
    Ok(acc / count as f64)
}

/// Seeded-shuffle minibatch MSE descent with early stopping; returns the
/// parameters of the best validation epoch and the full history.
pub fn train(
    cfg: &UnetConfig,
    train_set: &DataSet,
    val_set: &DataSet,
    tcfg: &TrainConfig,
) -> Result<(ModelParams, Vec<EpochStats>)> {
    let l = train_set.validate()?;
    val_set.validate()?;
    if tcfg.batch_size < 1 || tcfg.patience < 1 {
        return Err(Error::InvalidParams(
            "batch_size and patience must be >= 1".into(),
        ));
    }

    let mut params = init_params(cfg)?;
    let mut state = OptimState::new(&params);
    let mut history = Vec::new();
    let mut best_loss = f64::INFINITY;
    let mut best_params = params.clone();
    let mut stale = 0usize;

    for epoch in 1..=tcfg.max_epochs {
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        let mut rng = stream_rng(tcfg.shuffle_seed, StreamId::Shuffle, epoch as u64);
        order.shuffle(&mut rng);

        let mut train_acc = 0.0;
        for chunk in order.chunks(tcfg.batch_size) {
            let bs = chunk.len();
            let mut input = Vec::with_capacity(bs * l);
            let mut target = Vec::with_capacity(bs * l);
            for &i in chunk {
                input.extend_from_slice(&train_set.inputs[i]);
                target.extend_from_slice(&train_set.targets[i]);
            }
            let mut g = build_forward(&params, cfg, [bs, l, 1], input)?;
            let t = g.tape.input([bs, 1, l], target);
            let loss = g.tape.mse_loss(g.output, t)?;
            train_acc += g.tape.scalar(loss) * bs as f64;
            let grads = g.tape.backward(loss, params.tensors.len())?;
            adadelta_step(&mut params, &grads, &mut state)?;
        }
        let train_loss = train_acc / train_set.len() as f64;
        let val_loss = evaluate(&params, cfg, val_set, tcfg.batch_size)?;
        history.push(EpochStats {
            epoch,
            train_loss,
            val_loss,
        });

        if val_loss < best_loss {
            best_loss = val_loss;
            best_params = params.clone();
            stale = 0;
        } else {
            stale += 1;
            if stale >= tcfg.patience {
                break;
            }
        }
    }
    Ok((best_params, history))
}
