use std::io::{BufRead, Write};

use ndarray::Array2;

use super::mst::MstEdge;
use crate::error::{Result, ShadeError};

/// Parent id stored for the root.
pub const NO_PARENT: usize = usize::MAX;

/// Binary ultrametric dendrogram over `n` points.
///
/// Node ids `0..n` are the leaves (one per point, id = point index); ids
/// `n..2n-1` are internal nodes. An internal node's height is the
/// density-connectivity distance between any leaf of its left subtree and
/// any leaf of its right subtree, so the distance between two points is the
/// height of their lowest common ancestor.
#[derive(Debug, Clone)]
pub struct DcTree {
    n: usize,
    parent: Vec<usize>,
    children: Vec<[usize; 2]>,
    height: Vec<f64>,
    leaf_count: Vec<usize>,
    root: usize,
    /// Leaves in depth-first order; every node owns a contiguous span.
    leaf_order: Vec<usize>,
    span: Vec<(usize, usize)>,
    lca: LcaIndex,
    dense: Option<Vec<f64>>,
}

/// Builds the dc-tree from a spanning tree of the mutual reachability graph.
///
/// Edges are merged in ascending `(weight, u, v)` order with a union-find;
/// each union creates an internal node whose height is the edge weight and
/// whose children are the current roots of the two merged components.
pub fn build_dc_tree(n: usize, edges: &[MstEdge]) -> Result<DcTree> {
    let mut sorted = edges.to_vec();
    sorted.sort_by(|a, b| a.order(b));
    DcTree::from_ordered_edges(n, &sorted)
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
    /// Tree node currently representing each component root.
    node: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            node: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if self.rank[a] < self.rank[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        if self.rank[a] == self.rank[b] {
            self.rank[a] += 1;
        }
        a
    }
}

impl DcTree {
    /// Merges edges in the order given. Weights must be non-decreasing.
    pub(crate) fn from_ordered_edges(n: usize, edges: &[MstEdge]) -> Result<DcTree> {
        if n < 2 {
            return Err(ShadeError::InsufficientPoints { needed: 2, got: n });
        }
        let mut dsu = DisjointSet::new(n);
        let mut parent = vec![NO_PARENT; 2 * n - 1];
        let mut height = vec![0.0; 2 * n - 1];
        let mut children = Vec::with_capacity(n - 1);
        let mut merged = 0;
        let mut last = f64::NEG_INFINITY;
        for e in edges {
            for idx in [e.u, e.v] {
                if idx >= n {
                    return Err(ShadeError::IndexOutOfRange { index: idx, len: n });
                }
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(ShadeError::invalid("edges", format!("bad weight {}", e.weight)));
            }
            if e.weight < last {
                return Err(ShadeError::invalid("edges", "weights must be non-decreasing"));
            }
            last = e.weight;
            let (ru, rv) = (dsu.find(e.u), dsu.find(e.v));
            if ru == rv {
                // a cycle: the edge set cannot span the points
                continue;
            }
            let id = n + children.len();
            let (a, b) = (dsu.node[ru], dsu.node[rv]);
            parent[a] = id;
            parent[b] = id;
            height[id] = e.weight;
            children.push([a, b]);
            let r = dsu.union(ru, rv);
            dsu.node[r] = id;
            merged += 1;
        }
        if merged != n - 1 {
            return Err(ShadeError::Disconnected {
                n,
                components: n - merged,
            });
        }
        Ok(Self::finish(n, parent, children, height, 2 * n - 2))
    }

    fn finish(n: usize, parent: Vec<usize>, children: Vec<[usize; 2]>, height: Vec<f64>, root: usize) -> Self {
        let total = 2 * n - 1;
        let mut leaf_count = vec![0usize; total];
        let mut span = vec![(0usize, 0usize); total];
        let mut leaf_order = Vec::with_capacity(n);
        let mut tour = Vec::with_capacity(2 * total);
        let mut depth = Vec::with_capacity(2 * total);
        let mut first = vec![u32::MAX; total];

        // iterative DFS: (node, next child slot)
        let mut stack: Vec<(usize, u8)> = vec![(root, 0)];
        let mut visit = |node: usize, d: usize, tour: &mut Vec<u32>, depth: &mut Vec<u32>| {
            if first[node] == u32::MAX {
                first[node] = tour.len() as u32;
            }
            tour.push(node as u32);
            depth.push(d as u32);
        };
        visit(root, 0, &mut tour, &mut depth);
        span[root].0 = 0;
        while let Some(top) = stack.last_mut() {
            let (node, slot) = *top;
            if node >= n && slot < 2 {
                top.1 += 1;
                let c = children[node - n][slot as usize];
                span[c].0 = leaf_order.len();
                stack.push((c, 0));
                visit(c, stack.len() - 1, &mut tour, &mut depth);
                continue;
            }
            stack.pop();
            if node < n {
                leaf_order.push(node);
                leaf_count[node] = 1;
            } else {
                let [a, b] = children[node - n];
                leaf_count[node] = leaf_count[a] + leaf_count[b];
            }
            span[node].1 = leaf_order.len();
            if let Some(&(p, _)) = stack.last() {
                visit(p, stack.len() - 1, &mut tour, &mut depth);
            }
        }

        let lca = LcaIndex::new(tour, depth, first);
        Self {
            n,
            parent,
            children,
            height,
            leaf_count,
            root,
            leaf_order,
            span,
            lca,
            dense: None,
        }
    }

    /// Rebuilds a tree from per-node parent links and heights.
    ///
    /// `parent[id]` is [`NO_PARENT`] for the root only. Leaves are ids `0..n`
    /// and internal nodes `n..2n-1`; children are ordered by ascending id.
    pub fn from_parents(n: usize, parent: Vec<usize>, height: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(ShadeError::InsufficientPoints { needed: 2, got: n });
        }
        let total = 2 * n - 1;
        if parent.len() != total || height.len() != total {
            return Err(ShadeError::invalid(
                "tree",
                format!("expected {total} nodes for {n} leaves"),
            ));
        }
        let mut kids: Vec<Vec<usize>> = vec![Vec::new(); n - 1];
        let mut root = None;
        for (id, &p) in parent.iter().enumerate() {
            if p == NO_PARENT {
                if root.replace(id).is_some() {
                    return Err(ShadeError::invalid("tree", "more than one root"));
                }
                continue;
            }
            if p < n || p >= total {
                return Err(ShadeError::invalid("tree", format!("node {id} has invalid parent {p}")));
            }
            kids[p - n].push(id);
        }
        let root = root.ok_or_else(|| ShadeError::invalid("tree", "no root"))?;
        if root < n {
            return Err(ShadeError::invalid("tree", "root is a leaf"));
        }
        let mut children = Vec::with_capacity(n - 1);
        for (k, c) in kids.iter().enumerate() {
            if c.len() != 2 {
                return Err(ShadeError::invalid(
                    "tree",
                    format!("internal node {} has {} children", n + k, c.len()),
                ));
            }
            children.push([c[0], c[1]]);
        }
        for (id, &h) in height.iter().enumerate() {
            if !(h.is_finite() && h >= 0.0) || (id < n && h != 0.0) {
                return Err(ShadeError::invalid("tree", format!("node {id} has bad height {h}")));
            }
            if parent[id] != NO_PARENT && height[parent[id]] < h {
                return Err(ShadeError::invalid(
                    "tree",
                    format!("node {id} is higher than its parent"),
                ));
            }
        }
        let tree = Self::finish(n, parent, children, height, root);
        if tree.leaf_order.len() != n {
            return Err(ShadeError::invalid("tree", "nodes unreachable from the root"));
        }
        Ok(tree)
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn n_nodes(&self) -> usize {
        2 * self.n - 1
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.n
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        Some(self.parent[node]).filter(|&p| p != NO_PARENT)
    }

    pub fn children(&self, node: usize) -> Option<[usize; 2]> {
        (node >= self.n).then(|| self.children[node - self.n])
    }

    pub fn height(&self, node: usize) -> f64 {
        self.height[node]
    }

    pub fn leaf_count(&self, node: usize) -> usize {
        self.leaf_count[node]
    }

    /// Point indices under `node`, in depth-first order.
    pub fn leaves(&self, node: usize) -> &[usize] {
        let (a, b) = self.span[node];
        &self.leaf_order[a..b]
    }

    /// All node ids, every parent before its children (left subtree first).
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n_nodes());
        let mut stack = vec![self.root];
        while let Some(node) = stack.pop() {
            out.push(node);
            if let Some([a, b]) = self.children(node) {
                stack.push(b);
                stack.push(a);
            }
        }
        out
    }

    pub fn lca(&self, i: usize, j: usize) -> usize {
        self.lca.query(i, j)
    }

    /// Precomputes all pairwise distances when `n` is at most `threshold`.
    pub fn enable_dense_cache(&mut self, threshold: usize) {
        if self.n > threshold || self.dense.is_some() {
            return;
        }
        let n = self.n;
        let mut d = vec![0.0; n * n];
        for (k, &[a, b]) in self.children.iter().enumerate() {
            let h = self.height[n + k];
            for &x in self.leaves(a) {
                for &y in self.leaves(b) {
                    d[x * n + y] = h;
                    d[y * n + x] = h;
                }
            }
        }
        self.dense = Some(d);
    }

    pub fn has_dense_cache(&self) -> bool {
        self.dense.is_some()
    }

    /// Distance without bounds reporting; panics on out-of-range indices.
    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match &self.dense {
            Some(d) => d[i * self.n + j],
            None => self.height[self.lca.query(i, j)],
        }
    }

    /// Density-connectivity distance between two points.
    pub fn dc_distance(&self, i: usize, j: usize) -> Result<f64> {
        for idx in [i, j] {
            if idx >= self.n {
                return Err(ShadeError::IndexOutOfRange { index: idx, len: self.n });
            }
        }
        Ok(self.distance(i, j))
    }

    /// `|B|×|B|` matrix of pairwise distances among `indices`.
    pub fn dc_distance_submatrix(&self, indices: &[usize]) -> Result<Array2<f64>> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.n) {
            return Err(ShadeError::IndexOutOfRange { index: bad, len: self.n });
        }
        let b = indices.len();
        let mut m = Array2::zeros((b, b));
        for r in 0..b {
            for c in (r + 1)..b {
                let d = self.distance(indices[r], indices[c]);
                m[[r, c]] = d;
                m[[c, r]] = d;
            }
        }
        Ok(m)
    }

    /// Writes one node per line: `node_id parent_id height leaf_count`.
    ///
    /// Leaves come first with ids equal to their point index and height 0;
    /// the root's parent is written as `-1`. Heights use the shortest
    /// decimal form that reads back to the same `f64`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# node_id parent_id height leaf_count")?;
        for id in 0..self.n_nodes() {
            match self.parent(id) {
                Some(p) => writeln!(w, "{} {} {} {}", id, p, self.height[id], self.leaf_count[id])?,
                None => writeln!(w, "{} -1 {} {}", id, self.height[id], self.leaf_count[id])?,
            }
        }
        Ok(())
    }

    /// Parses the format produced by [`DcTree::write_dump`].
    ///
    /// Lines starting with `#` and blank lines are skipped. Leaf counts are
    /// checked against the reconstructed tree.
    pub fn parse_dump<R: BufRead>(r: R) -> Result<Self> {
        let mut rows: Vec<(usize, usize, f64, usize)> = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ShadeError::Parse {
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(err(format!("expected 4 fields, found {}", fields.len())));
            }
            let id: usize = fields[0].parse().map_err(|_| err(format!("bad node id `{}`", fields[0])))?;
            let parent = match fields[1] {
                "-1" => NO_PARENT,
                s => s.parse().map_err(|_| err(format!("bad parent id `{s}`")))?,
            };
            let h: f64 = fields[2].parse().map_err(|_| err(format!("bad height `{}`", fields[2])))?;
            let count: usize = fields[3].parse().map_err(|_| err(format!("bad leaf count `{}`", fields[3])))?;
            rows.push((id, parent, h, count));
        }
        let total = rows.len();
        if total < 3 || total % 2 == 0 {
            return Err(ShadeError::Parse {
                line: 0,
                message: format!("{total} nodes cannot form a binary tree over at least 2 leaves"),
            });
        }
        let n = total.div_ceil(2);
        let mut parent = vec![NO_PARENT; total];
        let mut height = vec![0.0; total];
        let mut counts = vec![0usize; total];
        let mut seen = vec![false; total];
        for &(id, p, h, c) in &rows {
            if id >= total || seen[id] {
                return Err(ShadeError::Parse {
                    line: 0,
                    message: format!("node id {id} is duplicated or out of range"),
                });
            }
            seen[id] = true;
            parent[id] = p;
            height[id] = h;
            counts[id] = c;
        }
        let tree = Self::from_parents(n, parent, height)?;
        if let Some(id) = (0..total).find(|&id| counts[id] != tree.leaf_count[id]) {
            return Err(ShadeError::Parse {
                line: 0,
                message: format!(
                    "node {id}: leaf count {} does not match the tree ({})",
                    counts[id], tree.leaf_count[id]
                ),
            });
        }
        Ok(tree)
    }
}

/// Constant-time LCA via range-minimum over the Euler tour depths.
#[derive(Debug, Clone)]
struct LcaIndex {
    tour: Vec<u32>,
    depth: Vec<u32>,
    first: Vec<u32>,
    /// `table[k][i]`: tour position of minimum depth in `[i, i + 2^k)`.
    table: Vec<Vec<u32>>,
}

impl LcaIndex {
    fn new(tour: Vec<u32>, depth: Vec<u32>, first: Vec<u32>) -> Self {
        let len = tour.len();
        let mut table = vec![(0..len as u32).collect::<Vec<u32>>()];
        let mut k = 1;
        while (1 << k) <= len {
            let prev = &table[k - 1];
            let half = 1 << (k - 1);
            let row: Vec<u32> = (0..=len - (1 << k))
                .map(|i| {
                    let (a, b) = (prev[i], prev[i + half]);
                    if depth[b as usize] < depth[a as usize] {
                        b
                    } else {
                        a
                    }
                })
                .collect();
            table.push(row);
            k += 1;
        }
        Self {
            tour,
            depth,
            first,
            table,
        }
    }

    fn query(&self, u: usize, v: usize) -> usize {
        let (mut l, mut r) = (self.first[u] as usize, self.first[v] as usize);
        if l > r {
            std::mem::swap(&mut l, &mut r);
        }
        let k = (usize::BITS - 1 - (r - l + 1).leading_zeros()) as usize;
        let (a, b) = (self.table[k][l], self.table[k][r + 1 - (1 << k)]);
        let best = if self.depth[b as usize] < self.depth[a as usize] { b } else { a };
        self.tour[best as usize] as usize
    }
}
