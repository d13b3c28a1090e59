use ndarray::ArrayView2;

use super::assignment::{ClusterAssignment, NOISE};
use crate::dc::{euclidean, DcTree};
use crate::error::{Result, ShadeError};

/// Flat clustering at a fixed density-connectivity level.
///
/// Points with `d_dc ≤ epsilon` share a component. Components smaller than
/// `mu` are labelled [`NOISE`]; the rest are numbered by their smallest
/// point index.
pub fn cut_at_epsilon(tree: &DcTree, epsilon: f64, mu: usize) -> Result<ClusterAssignment> {
    if !(epsilon > 0.0) || epsilon.is_infinite() {
        return Err(ShadeError::invalid("epsilon", format!("must be positive and finite, got {epsilon}")));
    }
    if mu == 0 {
        return Err(ShadeError::invalid("mu", "must be at least 1"));
    }
    let mut components: Vec<&[usize]> = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(node) = stack.pop() {
        match tree.children(node) {
            Some([a, b]) if tree.height(node) > epsilon => stack.extend([a, b]),
            _ => components.push(tree.leaves(node)),
        }
    }
    let mut kept: Vec<(usize, &[usize])> = components
        .into_iter()
        .filter(|c| c.len() >= mu)
        .map(|c| (*c.iter().min().expect("components are non-empty"), c))
        .collect();
    kept.sort_unstable_by_key(|&(first, _)| first);

    let mut labels = vec![NOISE; tree.n_points()];
    for (label, (_, members)) in kept.iter().enumerate() {
        for &p in *members {
            labels[p] = label as i64;
        }
    }
    Ok(ClusterAssignment::new_unchecked(labels, kept.len()))
}

/// Gives every noise point the label of its nearest clustered point in
/// `points`; ties go to the lower index.
pub fn assign_noise_1nn(points: ArrayView2<'_, f64>, assignment: &ClusterAssignment) -> Result<ClusterAssignment> {
    let labels = assignment.labels();
    if points.nrows() != labels.len() {
        return Err(ShadeError::ShapeMismatch(format!(
            "{} points but {} labels",
            points.nrows(),
            labels.len()
        )));
    }
    let clustered: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != NOISE).collect();
    if clustered.is_empty() {
        return Err(ShadeError::NoClusters);
    }
    let out = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            if l != NOISE {
                return l;
            }
            let mut best = (f64::INFINITY, usize::MAX);
            for &j in &clustered {
                let d = euclidean(points.row(i), points.row(j));
                if d < best.0 {
                    best = (d, j);
                }
            }
            labels[best.1]
        })
        .collect();
    Ok(ClusterAssignment::new_unchecked(out, assignment.k()))
}
