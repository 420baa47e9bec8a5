//! Implicit occupancy network: point-cloud encoder, coordinate decoder with
//! binary/trinary heads, manual backprop + Adam training, grid inference,
//! MC-dropout variance, and checkpoint I/O.

pub mod checkpoint;
pub mod decoder;
pub mod encoder;
pub mod infer;
pub mod params;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use decoder::{decode_batch, probabilities, LOGIT_CLAMP};
pub use encoder::{encode, Encoding};
pub use infer::{
    decode, mc_dropout_variance, occupancy_gradient, occupied_channel, predict_grid, Prediction,
};
pub use params::{Linear, Mode, ModelConfig, ModelParams};
pub use train::{
    bce_loss, ce_loss, loss_from_logits, prepare_sample, sample_loss_grad, train, EarlyStop,
    PreparedSample, TrainConfig, TrainLogRow,
};
