use std::io::Write;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::adam_step;
use super::config::TrainConfig;
use super::loss::grad_combined;
use super::model::AutoencoderState;
use crate::data::DataMatrix;
use crate::dc::DcTree;
use crate::error::{Result, ShadeError};

/// Mean batch losses of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    /// 1-based epoch number.
    pub epoch: usize,
    pub loss_rec: f64,
    pub loss_d: f64,
    pub loss_total: f64,
}

/// Writes `epoch,loss_rec,loss_d,loss_total` rows under a header.
pub fn write_loss_csv<W: Write>(history: &[EpochLoss], mut w: W) -> std::io::Result<()> {
    writeln!(w, "epoch,loss_rec,loss_d,loss_total")?;
    for e in history {
        writeln!(w, "{},{},{},{}", e.epoch, e.loss_rec, e.loss_d, e.loss_total)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    /// Encoder output for every point, in input order.
    pub embedding: Array2<f64>,
    /// One entry per main-loop epoch; pretraining epochs are not recorded.
    pub history: Vec<EpochLoss>,
}

/// Batch partition of a shuffled index list: chunks of `batch_size`, with a
/// short final chunk kept only if it holds at least two points.
fn batches(order: &[usize], batch_size: usize) -> impl Iterator<Item = &[usize]> {
    order.chunks(batch_size).filter(|c| c.len() >= 2)
}

/// Trains `state` on `data` against the dc distances of `tree`.
///
/// Each epoch shuffles the point order with a ChaCha8 stream derived from
/// `config.seed`, walks the batches and applies one Adam step per batch.
/// `config.pretrain_epochs` reconstruction-only epochs run first. With
/// `config.normalize_ddc` the dc distances are divided by the tree's root
/// height.
pub fn train(data: &DataMatrix, tree: &DcTree, config: &TrainConfig, state: &mut AutoencoderState) -> Result<TrainOutput> {
    config.validate()?;
    let x = &data.features;
    let n = x.nrows();
    if tree.n_points() != n {
        return Err(ShadeError::ShapeMismatch(format!(
            "dc-tree over {} points, data has {n}",
            tree.n_points()
        )));
    }
    if x.ncols() != state.input_dim() {
        return Err(ShadeError::ShapeMismatch(format!(
            "autoencoder expects {} features, data has {}",
            state.input_dim(),
            x.ncols()
        )));
    }
    data.check_finite()?;
    let scale = match tree.height(tree.root()) {
        h if config.normalize_ddc && h > 0.0 => 1.0 / h,
        _ => 1.0,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let phases = [(config.pretrain_epochs, true), (config.epochs, false)];
    for (epochs, pretrain) in phases {
        let (lambda_rec, lambda_d) = if pretrain { (1.0, 0.0) } else { (config.lambda_rec, config.lambda_d) };
        for epoch in 1..=epochs {
            order.shuffle(&mut rng);
            let mut sums = [0.0; 3];
            let mut count = 0usize;
            for idx in batches(&order, config.batch_size) {
                let batch = x.select(Axis(0), idx);
                let mut ddc = tree.dc_distance_submatrix(idx)?;
                if scale != 1.0 {
                    ddc *= scale;
                }
                let (grads, loss) = grad_combined(state, batch.view(), ddc.view(), lambda_rec, lambda_d)?;
                adam_step(state, &grads, config.learning_rate)?;
                sums[0] += loss.reconstruction;
                sums[1] += loss.density;
                sums[2] += loss.total;
                count += 1;
            }
            if !pretrain {
                let mean = |s: f64| if count == 0 { 0.0 } else { s / count as f64 };
                history.push(EpochLoss {
                    epoch,
                    loss_rec: mean(sums[0]),
                    loss_d: mean(sums[1]),
                    loss_total: mean(sums[2]),
                });
            }
        }
    }
    let embedding = state.encode(x.view())?;
    Ok(TrainOutput { embedding, history })
}
