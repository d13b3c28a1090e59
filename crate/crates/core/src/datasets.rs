//! Seeded synthetic datasets with ground-truth labels.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Result, ShadeError};
use crate::hierarchy::NOISE;

/// Generator choice with its shape parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case")]
pub enum Generator {
    /// Two interlocked rings and an S-curve in 3d.
    RingsS { noise_sigma: f64 },
    /// Gaussian blobs plus uniform background noise.
    BlobsNoise { k: usize, spread: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    #[serde(flatten)]
    pub generator: Generator,
    pub n: usize,
    /// Fraction of background noise points; blobs only.
    pub noise_ratio: f64,
    pub d: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(ShadeError::invalid("n", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.noise_ratio) {
            return Err(ShadeError::invalid("noise_ratio", "must lie in [0, 1)"));
        }
        if matches!(self.generator, Generator::RingsS { .. }) && self.d != 3 {
            return Err(ShadeError::invalid("d", "the rings and S data is 3-dimensional"));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<DataMatrix> {
        self.validate()?;
        match self.generator {
            Generator::RingsS { noise_sigma } => gen_rings_s(self.n, noise_sigma, self.seed),
            Generator::BlobsNoise { k, spread } => gen_blobs_noise(k, self.n, self.d, spread, self.noise_ratio, self.seed),
        }
    }
}

/// Class sizes for splitting `n` points into `k` near-equal groups, larger
/// groups first.
fn split(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|c| n / k + usize::from(c < n % k)).collect()
}

/// Two interlocked unit rings and an S-shaped curve, one third of the
/// points each, with isotropic Gaussian jitter of deviation `noise_sigma`.
///
/// Ring A (label 0) lies in the xy-plane around the origin; ring B
/// (label 1) lies in the xz-plane around `(1, 0, 0)` and passes through
/// ring A. The S (label 2) lies in the xz-plane around `x = −2.5`, spanning
/// `z ∈ [−1, 1]`.
pub fn gen_rings_s(n: usize, noise_sigma: f64, seed: u64) -> Result<DataMatrix> {
    if n < 30 {
        return Err(ShadeError::InsufficientPoints { needed: 30, got: n });
    }
    if !(noise_sigma >= 0.0) || noise_sigma.is_infinite() {
        return Err(ShadeError::invalid("noise_sigma", "must be non-negative and finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, 3));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (class, size) in split(n, 3).into_iter().enumerate() {
        for _ in 0..size {
            let p = match class {
                0 => {
                    let s = rng.random_range(0.0..2.0 * PI);
                    [s.cos(), s.sin(), 0.0]
                }
                1 => {
                    let t = rng.random_range(0.0..2.0 * PI);
                    [1.0 + t.cos(), 0.0, t.sin()]
                }
                _ => {
                    let u: f64 = rng.random_range(-1.5 * PI..=1.5 * PI);
                    [-2.5 + 0.5 * u.sin(), 0.0, 0.5 * u.signum() * (u.cos() - 1.0)]
                }
            };
            for (k, v) in p.into_iter().enumerate() {
                let jitter = if noise_sigma > 0.0 {
                    noise_sigma * rng.sample::<f64, _>(StandardNormal)
                } else {
                    0.0
                };
                x[[row, k]] = v + jitter;
            }
            labels.push(class as i64);
            row += 1;
        }
    }
    DataMatrix::with_labels(x, labels)
}

/// `k` Gaussian blobs and `⌈noise_ratio · n⌉` uniform noise points, `n`
/// points in total, in `d` dimensions.
///
/// See [`gen_blobs`] for the construction.
pub fn gen_blobs_noise(k: usize, n: usize, d: usize, spread: f64, noise_ratio: f64, seed: u64) -> Result<DataMatrix> {
    gen_blobs(k, n, d, spread, noise_ratio, seed).map(|(data, _)| data)
}

const CENTER_ATTEMPTS: usize = 10_000;

/// Blob data together with the `k × d` blob centers.
///
/// Centers are drawn uniformly from a cube of side `20 · spread · k^(1/d)`
/// and rejected until every pair is at least `10 · spread` apart. Blob
/// points are `center + spread · N(0, I)`, split evenly over the blobs and
/// labelled `0..k`. Noise points are uniform over the bounding box of the
/// blob points widened by 20% in every coordinate and labelled
/// [`NOISE`]; they follow the blob points.
pub fn gen_blobs(k: usize, n: usize, d: usize, spread: f64, noise_ratio: f64, seed: u64) -> Result<(DataMatrix, Array2<f64>)> {
    if k == 0 || d == 0 {
        return Err(ShadeError::invalid("k, d", "must be at least 1"));
    }
    if !(spread > 0.0) || spread.is_infinite() {
        return Err(ShadeError::invalid("spread", "must be positive and finite"));
    }
    if !(0.0..1.0).contains(&noise_ratio) {
        return Err(ShadeError::invalid("noise_ratio", "must lie in [0, 1)"));
    }
    let n_noise = (noise_ratio * n as f64).ceil() as usize;
    let n_blob = n.saturating_sub(n_noise);
    if n_blob < k {
        return Err(ShadeError::InsufficientPoints { needed: k + n_noise, got: n });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 20.0 * spread * (k as f64).powf(1.0 / d as f64);
    let min_sep = 10.0 * spread;
    let mut centers = Array2::zeros((k, d));
    let mut placed = 0;
    let mut attempts = 0;
    while placed < k {
        if attempts == CENTER_ATTEMPTS {
            return Err(ShadeError::invalid(
                "k",
                format!("could not place {k} centers {min_sep} apart after {CENTER_ATTEMPTS} attempts"),
            ));
        }
        attempts += 1;
        let cand: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..side)).collect();
        let clear = (0..placed).all(|c| {
            let d2: f64 = cand.iter().zip(centers.row(c)).map(|(a, b)| (a - b) * (a - b)).sum();
            d2.sqrt() >= min_sep
        });
        if clear {
            centers.row_mut(placed).assign(&ndarray::ArrayView1::from(&cand));
            placed += 1;
        }
    }

    let mut x = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (c, size) in split(n_blob, k).into_iter().enumerate() {
        for _ in 0..size {
            for j in 0..d {
                x[[row, j]] = centers[[c, j]] + spread * rng.sample::<f64, _>(StandardNormal);
            }
            labels.push(c as i64);
            row += 1;
        }
    }
    for j in 0..d {
        let col = x.column(j);
        let blob = col.slice(ndarray::s![..n_blob]);
        let lo = blob.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = blob.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = 0.1 * (hi - lo);
        for r in n_blob..n {
            x[[r, j]] = if pad > 0.0 { rng.random_range(lo - pad..hi + pad) } else { lo };
        }
    }
    labels.resize(n, NOISE);
    Ok((DataMatrix::with_labels(x, labels)?, centers))
}
