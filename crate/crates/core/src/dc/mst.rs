use std::cmp::Ordering;

use crate::error::{Result, ShadeError};

/// One edge of a spanning tree, stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl MstEdge {
    pub fn new(a: usize, b: usize, weight: f64) -> Self {
        Self {
            u: a.min(b),
            v: a.max(b),
            weight,
        }
    }

    /// Total edge order: weight first, then the sorted endpoint pair.
    pub fn order(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.u.cmp(&other.u))
            .then(self.v.cmp(&other.v))
    }
}

/// Dense Prim's algorithm over the complete graph on `n` vertices.
///
/// Edges are compared by `(weight, min(u, v), max(u, v))`, a strict total
/// order, so the returned tree is the unique minimum under that order and
/// does not depend on evaluation order. `weight(i, j)` is called exactly once
/// per unordered pair.
pub fn build_mst<F>(n: usize, weight: F) -> Result<Vec<MstEdge>>
where
    F: Fn(usize, usize) -> f64,
{
    if n < 2 {
        return Err(ShadeError::InsufficientPoints { needed: 2, got: n });
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<Option<MstEdge>> = vec![None; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;

    for _ in 1..n {
        let mut next: Option<usize> = None;
        for v in 0..n {
            if in_tree[v] {
                continue;
            }
            let w = weight(current, v);
            if !w.is_finite() {
                return Err(ShadeError::invalid(
                    "weight",
                    format!("non-finite weight {w} between {current} and {v}"),
                ));
            }
            let cand = MstEdge::new(current, v, w);
            if best[v].is_none_or(|b| cand.order(&b) == Ordering::Less) {
                best[v] = Some(cand);
            }
            let b = best[v].expect("set above");
            if next.is_none_or(|n| b.order(&best[n].expect("candidate has edge")) == Ordering::Less) {
                next = Some(v);
            }
        }
        let v = next.expect("a vertex outside the tree remains");
        edges.push(best[v].expect("candidate has edge"));
        in_tree[v] = true;
        current = v;
    }
    Ok(edges)
}
