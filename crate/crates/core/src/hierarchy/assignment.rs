use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Result, ShadeError};

/// Label given to points outside every cluster.
pub const NOISE: i64 = -1;

/// Per-point cluster labels `0..k` with [`NOISE`] for unclustered points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    labels: Vec<i64>,
    k: usize,
    noise_ratio: f64,
}

impl ClusterAssignment {
    /// Accepts labels that are already contiguous `0..k` plus [`NOISE`].
    pub fn from_labels(labels: Vec<i64>) -> Result<Self> {
        let mut seen: Vec<bool> = Vec::new();
        for &l in &labels {
            if l < NOISE {
                return Err(ShadeError::invalid("labels", format!("label {l} is below the noise sentinel")));
            }
            if l >= 0 {
                let l = l as usize;
                if l >= seen.len() {
                    seen.resize(l + 1, false);
                }
                seen[l] = true;
            }
        }
        if let Some(gap) = seen.iter().position(|&s| !s) {
            return Err(ShadeError::invalid(
                "labels",
                format!("labels are not contiguous: {gap} is missing"),
            ));
        }
        Ok(Self::new_unchecked(labels, seen.len()))
    }

    /// Renumbers arbitrary labels to `0..k` by first appearance; negative
    /// labels all become [`NOISE`].
    pub fn canonicalize(labels: &[i64]) -> Self {
        let mut map = HashMap::new();
        let out: Vec<i64> = labels
            .iter()
            .map(|&l| {
                if l < 0 {
                    NOISE
                } else {
                    let next = map.len() as i64;
                    *map.entry(l).or_insert(next)
                }
            })
            .collect();
        let k = map.len();
        Self::new_unchecked(out, k)
    }

    pub(crate) fn new_unchecked(labels: Vec<i64>, k: usize) -> Self {
        let noise = labels.iter().filter(|&&l| l == NOISE).count();
        let noise_ratio = if labels.is_empty() {
            0.0
        } else {
            noise as f64 / labels.len() as f64
        };
        Self { labels, k, noise_ratio }
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn into_labels(self) -> Vec<i64> {
        self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of clusters.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn noise_ratio(&self) -> f64 {
        self.noise_ratio
    }

    pub fn n_noise(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    /// `point_index,label` rows under a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "point_index,label")?;
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(w, "{i},{l}")?;
        }
        Ok(())
    }

    /// Reads `point_index,label` rows; the header is optional and every
    /// index in `0..n` must appear exactly once.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows: Vec<(usize, i64)> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("point_index")) {
                continue;
            }
            let err = |message: String| ShadeError::Parse {
                line: lineno + 1,
                message,
            };
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| err("expected `point_index,label`".into()))?;
            let idx = a.trim().parse().map_err(|_| err(format!("bad point index `{a}`")))?;
            let label = b.trim().parse().map_err(|_| err(format!("bad label `{b}`")))?;
            rows.push((idx, label));
        }
        let n = rows.len();
        let mut labels = vec![None; n];
        for (idx, label) in rows {
            match labels.get_mut(idx) {
                Some(slot @ None) => *slot = Some(label),
                _ => {
                    return Err(ShadeError::Parse {
                        line: 0,
                        message: format!("point index {idx} duplicated or out of range for {n} rows"),
                    })
                }
            }
        }
        Self::from_labels(labels.into_iter().map(|l| l.expect("all indices filled")).collect())
    }
}
