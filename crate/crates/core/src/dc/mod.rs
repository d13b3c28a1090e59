//! Density-connectivity primitives.
//!
//! Core distances and mutual reachability distances are computed from raw
//! Euclidean distances; the minimum spanning tree of the mutual reachability
//! graph is then turned into a binary ultrametric dendrogram ([`DcTree`])
//! whose lowest-common-ancestor heights are the density-connectivity
//! distances.
//!
//! A point's core distance is the distance to its μ-th nearest neighbour
//! among the *other* points: the point itself is never counted. Comparisons
//! against implementations that count the query point must shift μ by one.

mod mst;
mod tree;

pub use mst::{build_mst, MstEdge};
pub use tree::{build_dc_tree, DcTree, NO_PARENT};

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::data::check_finite;
use crate::error::{Result, ShadeError};

/// Euclidean distance between two rows, summed in index order.
#[inline]
pub fn euclidean(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let t = x - y;
        acc += t * t;
    }
    acc.sqrt()
}

/// Full symmetric n×n Euclidean distance matrix with a zero diagonal.
pub fn pairwise_euclidean(points: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let n = points.nrows();
    if n < 2 {
        return Err(ShadeError::InsufficientPoints { needed: 2, got: n });
    }
    check_finite(points)?;
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(points.row(i), points.row(j));
            m[[i, j]] = d;
            m[[j, i]] = d;
        }
    }
    Ok(m)
}

fn check_mu(n: usize, mu: usize) -> Result<()> {
    if mu == 0 {
        return Err(ShadeError::invalid("mu", "must be at least 1"));
    }
    if mu >= n {
        return Err(ShadeError::InsufficientPoints {
            needed: mu + 1,
            got: n,
        });
    }
    Ok(())
}

fn kth_smallest(buf: &mut [f64], k: usize) -> f64 {
    let (_, v, _) = buf.select_nth_unstable_by(k - 1, |a, b| a.total_cmp(b));
    *v
}

/// μ-th smallest off-diagonal entry of every row of a distance matrix.
pub fn core_distances(distances: &Array2<f64>, mu: usize) -> Result<Vec<f64>> {
    let n = distances.nrows();
    if distances.ncols() != n {
        return Err(ShadeError::ShapeMismatch(format!(
            "distance matrix is {}x{}",
            n,
            distances.ncols()
        )));
    }
    check_mu(n, mu)?;
    let mut buf = Vec::with_capacity(n - 1);
    Ok((0..n)
        .map(|i| {
            buf.clear();
            buf.extend(
                distances
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &d)| d),
            );
            kth_smallest(&mut buf, mu)
        })
        .collect())
}

/// `max(d_e, core_i, core_j)`.
#[inline]
pub fn mutual_reachability(d_e: f64, core_i: f64, core_j: f64) -> f64 {
    d_e.max(core_i).max(core_j)
}

/// Core distances for a point set, computed row by row without holding the
/// full distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceContext {
    pub n: usize,
    pub mu: usize,
    pub core_dist: Vec<f64>,
}

impl DistanceContext {
    pub fn from_points(points: ArrayView2<'_, f64>, mu: usize) -> Result<Self> {
        let n = points.nrows();
        check_finite(points)?;
        check_mu(n, mu)?;
        let mut buf = Vec::with_capacity(n - 1);
        let core_dist = (0..n)
            .map(|i| {
                buf.clear();
                let pi = points.row(i);
                buf.extend(
                    (0..n)
                        .filter(|&j| j != i)
                        .map(|j| euclidean(pi, points.row(j))),
                );
                kth_smallest(&mut buf, mu)
            })
            .collect();
        Ok(Self { n, mu, core_dist })
    }

    pub fn from_distances(distances: &Array2<f64>, mu: usize) -> Result<Self> {
        Ok(Self {
            n: distances.nrows(),
            mu,
            core_dist: core_distances(distances, mu)?,
        })
    }

    /// Mutual reachability between two points given their Euclidean distance.
    #[inline]
    pub fn reachability(&self, i: usize, j: usize, d_e: f64) -> f64 {
        mutual_reachability(d_e, self.core_dist[i], self.core_dist[j])
    }
}

/// Core distances, mutual-reachability MST and dc-tree for a point set.
///
/// Distances are recomputed on the fly inside Prim's loop, so memory stays
/// linear in `n`.
pub fn dc_tree_for_points(points: ArrayView2<'_, f64>, mu: usize) -> Result<(DistanceContext, DcTree)> {
    let ctx = DistanceContext::from_points(points, mu)?;
    let edges = build_mst(ctx.n, |i, j| {
        ctx.reachability(i, j, euclidean(points.row(i), points.row(j)))
    })?;
    let tree = build_dc_tree(ctx.n, &edges)?;
    Ok((ctx, tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn three_four_five() {
        let m = pairwise_euclidean(array![[0.0, 0.0], [3.0, 4.0]].view()).unwrap();
        assert_eq!(m[[0, 1]], 5.0);
        assert_eq!(m[[1, 0]], 5.0);
        assert_eq!(m[[0, 0]], 0.0);
    }

    #[test]
    fn identical_points_have_zero_distance() {
        let m = pairwise_euclidean(array![[1.5, -2.0], [1.5, -2.0]].view()).unwrap();
        assert_eq!(m[[0, 1]], 0.0);
    }

    #[test]
    fn matches_naive_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Array2::from_shape_fn((4, 5), |_| rng.random_range(-3.0..3.0));
        let m = pairwise_euclidean(x.view()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0f64;
                for k in 0..5 {
                    s += (x[[i, k]] - x[[j, k]]).powi(2);
                }
                assert!((m[[i, j]] - s.sqrt()).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let err = pairwise_euclidean(array![[0.0, f64::NAN], [1.0, 1.0]].view()).unwrap_err();
        assert!(matches!(err, ShadeError::NonFinite { row: 0, col: 1 }));
        assert!(pairwise_euclidean(array![[0.0, 1.0]].view()).is_err());
    }

    #[test]
    fn core_distance_examples() {
        let two = pairwise_euclidean(array![[0.0], [2.0]].view()).unwrap();
        assert_eq!(core_distances(&two, 1).unwrap(), vec![2.0, 2.0]);

        let line = pairwise_euclidean(array![[0.0], [1.0], [3.0], [7.0]].view()).unwrap();
        assert_eq!(core_distances(&line, 2).unwrap(), vec![3.0, 2.0, 3.0, 6.0]);

        let dup = pairwise_euclidean(array![[1.0, 1.0], [1.0, 1.0], [9.0, 9.0]].view()).unwrap();
        let core = core_distances(&dup, 1).unwrap();
        assert_eq!(core[0], 0.0);
        assert_eq!(core[1], 0.0);
    }

    #[test]
    fn mu_must_leave_a_neighbour() {
        let m = pairwise_euclidean(array![[0.0], [1.0], [2.0]].view()).unwrap();
        let err = core_distances(&m, 3).unwrap_err();
        assert!(err.to_string().contains("insufficient points for μ"));
    }

    #[test]
    fn context_from_points_agrees_with_matrix_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((30, 3), |_| rng.random_range(-1.0..1.0));
        let m = pairwise_euclidean(x.view()).unwrap();
        for mu in [1, 2, 5] {
            let a = DistanceContext::from_points(x.view(), mu).unwrap();
            let b = DistanceContext::from_distances(&m, mu).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn reachability_is_max_of_three() {
        assert_eq!(mutual_reachability(5.0, 2.0, 7.0), 7.0);
        assert_eq!(mutual_reachability(5.0, 2.0, 3.0), 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (d, a, b) = (rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>());
            assert_eq!(mutual_reachability(d, a, b), mutual_reachability(d, b, a));
        }
    }
}
