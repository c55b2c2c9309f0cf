//! Deterministic tensor engine with reverse-mode differentiation, the 1D
//! encoder-decoder network, Adadelta, and the training loop.

mod io;
mod optim;
mod tape;
mod train;
mod unet;

pub use io::{model_load, model_save};
pub use optim::{adadelta_step, OptimState};
pub use tape::{mse, Tape, Var};
pub use train::{evaluate, train, DataSet, EpochStats, TrainConfig};
pub use unet::{build_forward, init_params, unet_forward, ModelParams, NamedTensor, UnetConfig, UnetGraph};
