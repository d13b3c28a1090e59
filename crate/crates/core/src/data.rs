//! Dataset container and z-normalization.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShadeError};

/// `n` points by `d` features, optionally with one integer label per point.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    pub features: Array2<f64>,
    pub labels: Option<Vec<i64>>,
}

impl DataMatrix {
    pub fn new(features: Array2<f64>) -> Self {
        Self {
            features,
            labels: None,
        }
    }

    pub fn with_labels(features: Array2<f64>, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(ShadeError::ShapeMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                features.nrows()
            )));
        }
        Ok(Self {
            features,
            labels: Some(labels),
        })
    }

    pub fn n_points(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Fails on the first NaN or infinite entry, in row-major order.
    pub fn check_finite(&self) -> Result<()> {
        check_finite(self.features.view())
    }
}

pub(crate) fn check_finite(m: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(ShadeError::NonFinite { row, col });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    /// Every column standardized on its own.
    #[default]
    FeatureWise,
    /// One mean and one standard deviation over all entries.
    Global,
    /// Data used as given.
    None,
}

/// Per-column (or broadcast global) statistics applied by [`znormalize`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mode: NormalizationMode,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

/// Centers and scales the data to zero mean and unit (population) variance.
///
/// Zero-variance columns (or a zero-variance matrix in global mode) map to
/// all zeros. The returned statistics hold the mean and the standard
/// deviation that was divided out, with a scale of 1 recorded for
/// zero-variance columns.
pub fn znormalize(data: &DataMatrix, mode: NormalizationMode) -> Result<(DataMatrix, Normalization)> {
    let n = data.n_points();
    let d = data.n_features();
    if n < 2 {
        return Err(ShadeError::InsufficientPoints { needed: 2, got: n });
    }
    let x = &data.features;
    let (means, stds): (Vec<f64>, Vec<f64>) = match mode {
        NormalizationMode::FeatureWise => x
            .axis_iter(Axis(1))
            .map(|col| {
                let mean = col.sum() / n as f64;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                (mean, var.sqrt())
            })
            .unzip(),
        NormalizationMode::Global => {
            let total = (n * d) as f64;
            let mean = x.sum() / total;
            let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / total;
            (vec![mean; d], vec![var.sqrt(); d])
        }
        NormalizationMode::None => (vec![0.0; d], vec![1.0; d]),
    };

    let mut out = x.clone();
    for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
        if stds[j] > 0.0 {
            col.mapv_inplace(|v| (v - means[j]) / stds[j]);
        } else {
            col.fill(0.0);
        }
    }
    let scales = stds.iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect();
    Ok((
        DataMatrix {
            features: out,
            labels: data.labels.clone(),
        },
        Normalization {
            mode,
            means,
            scales,
        },
    ))
}

/// Column means of a matrix; used by tests and summaries.
pub fn column_means(m: &Array2<f64>) -> Array1<f64> {
    m.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(m.ncols()))
}
