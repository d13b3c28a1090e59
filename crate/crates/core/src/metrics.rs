//! External validity indices: adjusted Rand index, normalized mutual
//! information and contingency tables.
//!
//! [`ari`] and [`nmi`] treat every distinct label value as a class, the
//! noise sentinel included. [`evaluate_with_noise`] produces the
//! noise-aware views used when reporting a clustering with noise.

use std::collections::HashMap;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ShadeError};
use crate::hierarchy::{assign_noise_1nn, ClusterAssignment, NOISE};

/// Co-occurrence counts of two labelings.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    /// Distinct labels of the first labeling, in order of first appearance.
    pub row_labels: Vec<i64>,
    pub col_labels: Vec<i64>,
    /// `counts[r][c]`: points labelled `row_labels[r]` and `col_labels[c]`.
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

fn index_labels(labels: &[i64]) -> (Vec<i64>, Vec<usize>) {
    let mut map: HashMap<i64, usize> = HashMap::new();
    let mut distinct = Vec::new();
    let idx = labels
        .iter()
        .map(|&l| {
            *map.entry(l).or_insert_with(|| {
                distinct.push(l);
                distinct.len() - 1
            })
        })
        .collect();
    (distinct, idx)
}

impl ContingencyTable {
    pub fn new(a: &[i64], b: &[i64]) -> Result<Self> {
        if a.len() != b.len() {
            return Err(ShadeError::ShapeMismatch(format!(
                "labelings have lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        let (row_labels, ra) = index_labels(a);
        let (col_labels, cb) = index_labels(b);
        let mut counts = vec![vec![0u64; col_labels.len()]; row_labels.len()];
        for (&r, &c) in ra.iter().zip(&cb) {
            counts[r][c] += 1;
        }
        let row_sums = counts.iter().map(|row| row.iter().sum()).collect();
        let col_sums = (0..col_labels.len()).map(|c| counts.iter().map(|row| row[c]).sum()).collect();
        Ok(Self {
            row_labels,
            col_labels,
            counts,
            row_sums,
            col_sums,
            total: a.len() as u64,
        })
    }
}

fn pairs(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index.
///
/// Returns 1.0 when the denominator vanishes, which happens when both
/// labelings are trivial (all one class, or all singletons) and for fewer
/// than two points.
pub fn ari(a: &[i64], b: &[i64]) -> Result<f64> {
    let t = ContingencyTable::new(a, b)?;
    let index: f64 = t.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let sum_a: f64 = t.row_sums.iter().map(|&c| pairs(c)).sum();
    let sum_b: f64 = t.col_sums.iter().map(|&c| pairs(c)).sum();
    let total = pairs(t.total);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok((index - expected) / denom)
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information with arithmetic-mean normalization and
/// natural logarithms.
///
/// Two single-class labelings (both entropies zero) score 1.0; if only one
/// entropy is zero the score is 0.
pub fn nmi(a: &[i64], b: &[i64]) -> Result<f64> {
    let t = ContingencyTable::new(a, b)?;
    if t.total == 0 {
        return Ok(1.0);
    }
    let n = t.total as f64;
    let ha = entropy(&t.row_sums, n);
    let hb = entropy(&t.col_sums, n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (r, row) in t.counts.iter().enumerate() {
        for (c, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (t.row_sums[r] as f64 * t.col_sums[c] as f64)).ln();
            }
        }
    }
    Ok((mi / (0.5 * (ha + hb))).clamp(0.0, 1.0))
}

/// Confusion matrix with truth classes as rows and predicted labels as
/// columns, both sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Confusion {
    pub truth_labels: Vec<i64>,
    pub predicted_labels: Vec<i64>,
    pub counts: Vec<Vec<u64>>,
}

pub fn confusion(truth: &[i64], predicted: &[i64]) -> Result<Confusion> {
    let t = ContingencyTable::new(truth, predicted)?;
    let mut rows: Vec<usize> = (0..t.row_labels.len()).collect();
    rows.sort_by_key(|&r| t.row_labels[r]);
    let mut cols: Vec<usize> = (0..t.col_labels.len()).collect();
    cols.sort_by_key(|&c| t.col_labels[c]);
    Ok(Confusion {
        truth_labels: rows.iter().map(|&r| t.row_labels[r]).collect(),
        predicted_labels: cols.iter().map(|&c| t.col_labels[c]).collect(),
        counts: rows.iter().map(|&r| cols.iter().map(|&c| t.counts[r][c]).collect()).collect(),
    })
}

/// ARI and NMI of one comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub ari: f64,
    pub nmi: f64,
}

impl Scores {
    pub fn compute(truth: &[i64], predicted: &[i64]) -> Result<Self> {
        Ok(Self {
            ari: ari(truth, predicted)?,
            nmi: nmi(truth, predicted)?,
        })
    }
}

/// The noise-aware evaluation views of one clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseEvaluation {
    /// Scores on the points the clustering did not call noise; absent when
    /// every point is noise.
    pub non_noise: Option<Scores>,
    /// Scores after every noise point takes its nearest cluster's label.
    pub one_nn: Scores,
    pub assignment_1nn: ClusterAssignment,
    pub k: usize,
    pub noise_ratio: f64,
}

/// Scores `assignment` against `truth` on the non-noise points and after
/// 1-nearest-neighbour noise reassignment in `embedding`.
///
/// An all-noise assignment has no 1-nn view and is an error.
pub fn evaluate_with_noise(truth: &[i64], assignment: &ClusterAssignment, embedding: ArrayView2<'_, f64>) -> Result<NoiseEvaluation> {
    let labels = assignment.labels();
    if truth.len() != labels.len() {
        return Err(ShadeError::ShapeMismatch(format!(
            "{} truth labels for {} assigned points",
            truth.len(),
            labels.len()
        )));
    }
    let keep: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != NOISE).collect();
    let non_noise = if keep.is_empty() {
        None
    } else {
        let t: Vec<i64> = keep.iter().map(|&i| truth[i]).collect();
        let p: Vec<i64> = keep.iter().map(|&i| labels[i]).collect();
        Some(Scores::compute(&t, &p)?)
    };
    let assignment_1nn = assign_noise_1nn(embedding, assignment)?;
    Ok(NoiseEvaluation {
        non_noise,
        one_nn: Scores::compute(truth, assignment_1nn.labels())?,
        assignment_1nn,
        k: assignment.k(),
        noise_ratio: assignment.noise_ratio(),
    })
}

/// Contents of `metrics.json`; score fields are `null` without ground
/// truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ari: Option<f64>,
    pub nmi: Option<f64>,
    pub ari_nonnoise: Option<f64>,
    pub nmi_nonnoise: Option<f64>,
    pub ari_1nn: Option<f64>,
    pub nmi_1nn: Option<f64>,
    pub k_detected: usize,
    pub noise_ratio: f64,
}

impl MetricsReport {
    /// Report for a clustering and its 1-nn completion. `ari`/`nmi` score
    /// the raw labels with noise as its own class.
    pub fn new(truth: Option<&[i64]>, assignment: &ClusterAssignment, assignment_1nn: &ClusterAssignment) -> Result<Self> {
        let mut report = Self {
            ari: None,
            nmi: None,
            ari_nonnoise: None,
            nmi_nonnoise: None,
            ari_1nn: None,
            nmi_1nn: None,
            k_detected: assignment.k(),
            noise_ratio: assignment.noise_ratio(),
        };
        if let Some(truth) = truth {
            let raw = Scores::compute(truth, assignment.labels())?;
            report.ari = Some(raw.ari);
            report.nmi = Some(raw.nmi);
            let labels = assignment.labels();
            let keep: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != NOISE).collect();
            if !keep.is_empty() {
                let t: Vec<i64> = keep.iter().map(|&i| truth[i]).collect();
                let p: Vec<i64> = keep.iter().map(|&i| labels[i]).collect();
                let s = Scores::compute(&t, &p)?;
                report.ari_nonnoise = Some(s.ari);
                report.nmi_nonnoise = Some(s.nmi);
            }
            let s = Scores::compute(truth, assignment_1nn.labels())?;
            report.ari_1nn = Some(s.ari);
            report.nmi_1nn = Some(s.nmi);
        }
        Ok(report)
    }
}
