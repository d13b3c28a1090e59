use ndarray::{Array2, ArrayView2};

use super::model::{backward, forward_traced, AutoencoderState, Gradients};
use crate::error::{Result, ShadeError};

/// Clamp on embedded distances in the density-loss gradient.
pub const DISTANCE_CLAMP: f64 = 1e-12;

/// Loss values of one batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValues {
    pub reconstruction: f64,
    pub density: f64,
    /// `λ_rec · reconstruction + λ_d · density`.
    pub total: f64,
}

/// Mean over the batch of the squared reconstruction error.
pub fn loss_reconstruction(batch: ArrayView2<'_, f64>, reconstruction: ArrayView2<'_, f64>) -> Result<f64> {
    if batch.dim() != reconstruction.dim() || batch.nrows() == 0 {
        return Err(ShadeError::ShapeMismatch(format!(
            "batch {:?} vs reconstruction {:?}",
            batch.dim(),
            reconstruction.dim()
        )));
    }
    let sq: f64 = batch.iter().zip(reconstruction.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sq / batch.nrows() as f64)
}

/// `(1/|B|²) Σ_{i≠j} (d_dc(i, j) − ‖z_i − z_j‖)²` over ordered pairs.
pub fn loss_density(embedding: ArrayView2<'_, f64>, ddc: ArrayView2<'_, f64>) -> Result<f64> {
    check_ddc(embedding, ddc)?;
    Ok(density_terms(embedding, ddc, false).0)
}

fn check_ddc(embedding: ArrayView2<'_, f64>, ddc: ArrayView2<'_, f64>) -> Result<()> {
    let b = embedding.nrows();
    if ddc.dim() != (b, b) || b == 0 {
        return Err(ShadeError::ShapeMismatch(format!(
            "{b} embedded points vs distance matrix {:?}",
            ddc.dim()
        )));
    }
    Ok(())
}

/// Density loss and, if requested, its gradient w.r.t. the embedding.
fn density_terms(z: ArrayView2<'_, f64>, ddc: ArrayView2<'_, f64>, with_grad: bool) -> (f64, Array2<f64>) {
    let b = z.nrows();
    let m = z.ncols();
    let norm = 1.0 / (b * b) as f64;
    let mut grad = Array2::zeros(if with_grad { (b, m) } else { (0, 0) });
    let mut diff = vec![0.0; m];
    let mut loss = 0.0;
    for i in 0..b {
        let zi = z.row(i);
        for j in i + 1..b {
            let zj = z.row(j);
            let mut r2 = 0.0;
            for k in 0..m {
                diff[k] = zi[k] - zj[k];
                r2 += diff[k] * diff[k];
            }
            let r = r2.sqrt();
            let gap = ddc[[i, j]] - r;
            loss += 2.0 * gap * gap;
            if with_grad {
                let coef = -4.0 * norm * gap / r.max(DISTANCE_CLAMP);
                for k in 0..m {
                    let g = coef * diff[k];
                    grad[[i, k]] += g;
                    grad[[j, k]] -= g;
                }
            }
        }
    }
    (loss * norm, grad)
}

/// Loss values and exact gradients of `λ_rec · L_rec + λ_d · L_d` for one
/// batch.
///
/// Coincident embedded points contribute a zero gradient because their
/// difference vector vanishes; the distance clamp only prevents a division
/// by zero.
pub fn grad_combined(
    state: &AutoencoderState,
    batch: ArrayView2<'_, f64>,
    ddc: ArrayView2<'_, f64>,
    lambda_rec: f64,
    lambda_d: f64,
) -> Result<(Gradients, LossValues)> {
    if batch.ncols() != state.input_dim() {
        return Err(ShadeError::ShapeMismatch(format!(
            "expected {} columns, got {}",
            state.input_dim(),
            batch.ncols()
        )));
    }
    let b = batch.nrows();
    let enc = forward_traced(&state.encoder, batch);
    let z = enc.output();
    check_ddc(z.view(), ddc)?;
    let dec = forward_traced(&state.decoder, z.view());
    let xhat = dec.output();

    let reconstruction = loss_reconstruction(batch, xhat.view())?;
    let (density, d_z_density) = density_terms(z.view(), ddc, true);

    let d_xhat = (xhat - &batch) * (2.0 * lambda_rec / b as f64);
    let (decoder, d_z_rec) = backward(&state.decoder, &dec, d_xhat);
    let d_z = d_z_rec + &(d_z_density * lambda_d);
    let (encoder, _) = backward(&state.encoder, &enc, d_z);

    Ok((
        Gradients { encoder, decoder },
        LossValues {
            reconstruction,
            density,
            total: lambda_rec * reconstruction + lambda_d * density,
        },
    ))
}
