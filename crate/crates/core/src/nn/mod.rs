//! Autoencoder with hand-written backpropagation and Adam.
//!
//! The encoder maps points to an embedding whose pairwise Euclidean
//! distances are pulled towards the input's density-connectivity distances;
//! the decoder keeps the embedding informative through a reconstruction
//! loss. Layers are dense with ReLU hidden units and linear embedding and
//! output layers.

mod adam;
mod config;
mod loss;
mod model;
mod train;

pub use adam::{adam_step, BETA1, BETA2, EPSILON};
pub use config::TrainConfig;
pub use loss::{grad_combined, loss_density, loss_reconstruction, LossValues, DISTANCE_CLAMP};
pub use model::{init_autoencoder, Activation, AutoencoderState, Dense, Gradients, LayerGrad};
pub use train::{train, write_loss_csv, EpochLoss, TrainOutput};
