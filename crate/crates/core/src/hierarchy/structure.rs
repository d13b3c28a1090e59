use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dc::DcTree;
use crate::error::{Result, ShadeError};

/// One node of the condensed hierarchy.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Density-connectivity distance at which this node's cluster splits.
    pub height: f64,
    /// Points in the whole subtree, bordering points included.
    pub leaf_count: usize,
    /// Points attached directly to this node and to none of its children.
    pub members: Vec<usize>,
    /// dc-tree node whose height this node carries, when built from a tree.
    pub source: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityScore {
    pub node: usize,
    pub stability: f64,
}

/// Condensation of a dc-tree to its structurally relevant splits.
///
/// Every non-root node holds at least μ points. Points that only split off
/// in groups smaller than μ are attached to a node as bordering members
/// rather than forming nodes of their own.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureTree {
    nodes: Vec<StructureNode>,
    root: usize,
    mu: usize,
    n_points: usize,
}

/// Condenses `tree` to the nodes whose two children both hold at least `mu`
/// leaves.
///
/// The topmost such node becomes the root and takes every point above it.
/// Below a kept node, the leaves of a skipped subtree go to the topmost kept
/// node inside that subtree; a skipped subtree without any kept node is
/// attached to the kept node above it. A kept node left with a single kept
/// child is merged with that child and takes the child's height. Without any
/// kept node the result is a single root holding all points at the height of
/// the dc-tree root.
pub fn build_structure_tree(tree: &DcTree, mu: usize) -> Result<StructureTree> {
    build(tree, mu, true)
}

pub(crate) fn build(tree: &DcTree, mu: usize, merge: bool) -> Result<StructureTree> {
    if mu < 2 {
        return Err(ShadeError::invalid("mu", "must be at least 2"));
    }
    let n = tree.n_points();
    let order = tree.preorder();
    let qualifies = |node: usize| {
        tree.children(node)
            .is_some_and(|[a, b]| tree.leaf_count(a) >= mu && tree.leaf_count(b) >= mu)
    };
    let mut has_kept = vec![false; tree.n_nodes()];
    for &node in order.iter().rev() {
        has_kept[node] = qualifies(node)
            || tree
                .children(node)
                .is_some_and(|[a, b]| has_kept[a] || has_kept[b]);
    }
    if !has_kept[tree.root()] {
        return Ok(StructureTree {
            nodes: vec![StructureNode {
                parent: None,
                children: Vec::new(),
                height: tree.height(tree.root()),
                leaf_count: n,
                members: (0..n).collect(),
                source: Some(tree.root()),
            }],
            root: 0,
            mu,
            n_points: n,
        });
    }

    // Below a node that is not kept at most one child can hold a kept node,
    // so the topmost kept node of a subtree is unique.
    let topmost_kept = |mut node: usize| -> usize {
        while !qualifies(node) {
            let [a, b] = tree.children(node).expect("subtree holds a kept node");
            node = if has_kept[a] { a } else { b };
        }
        node
    };

    let mut nodes: Vec<StructureNode> = Vec::new();
    let mut id_of = vec![usize::MAX; tree.n_nodes()];
    let new_node = |nodes: &mut Vec<StructureNode>, src: usize, parent: Option<usize>| {
        nodes.push(StructureNode {
            parent,
            children: Vec::new(),
            height: tree.height(src),
            leaf_count: 0,
            members: Vec::new(),
            source: Some(src),
        });
        nodes.len() - 1
    };
    let top = topmost_kept(tree.root());
    id_of[top] = new_node(&mut nodes, top, None);

    // (dc-tree node, structure node owning loose leaves found below it)
    let mut stack = vec![(tree.root(), id_of[top])];
    while let Some((node, owner)) = stack.pop() {
        if tree.is_leaf(node) {
            nodes[owner].members.push(node);
            continue;
        }
        let [a, b] = tree.children(node).expect("internal node");
        if !qualifies(node) {
            stack.push((b, owner));
            stack.push((a, owner));
            continue;
        }
        let here = id_of[node];
        for child in [b, a] {
            if has_kept[child] {
                let q = topmost_kept(child);
                let id = new_node(&mut nodes, q, Some(here));
                id_of[q] = id;
                stack.push((child, id));
            } else {
                stack.push((child, here));
            }
        }
    }
    for id in 0..nodes.len() {
        if let Some(p) = nodes[id].parent {
            nodes[p].children.push(id);
        }
    }
    for node in &mut nodes {
        node.children.reverse();
    }

    if merge {
        merge_single_children(&mut nodes);
    }
    Ok(StructureTree::reindexed(nodes, 0, mu, n))
}

/// Folds every only-child into its parent; the parent keeps the child's
/// height, children and source.
fn merge_single_children(nodes: &mut [StructureNode]) {
    let mut stack = vec![0usize];
    while let Some(id) = stack.pop() {
        while nodes[id].children.len() == 1 {
            let child = nodes[id].children[0];
            let moved = std::mem::take(&mut nodes[child].members);
            let grandchildren = std::mem::take(&mut nodes[child].children);
            nodes[id].members.extend(moved);
            nodes[id].height = nodes[child].height;
            nodes[id].source = nodes[child].source;
            for &g in &grandchildren {
                nodes[g].parent = Some(id);
            }
            nodes[id].children = grandchildren;
            nodes[child].parent = None;
        }
        stack.extend(nodes[id].children.iter().rev());
    }
}

impl StructureTree {
    /// Keeps the nodes reachable from `root`, renumbered in preorder, and
    /// recomputes leaf counts.
    fn reindexed(old: Vec<StructureNode>, root: usize, mu: usize, n_points: usize) -> Self {
        let mut order = Vec::new();
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            order.push(id);
            stack.extend(old[id].children.iter().rev());
        }
        let mut new_id = vec![usize::MAX; old.len()];
        for (i, &id) in order.iter().enumerate() {
            new_id[id] = i;
        }
        let mut nodes: Vec<StructureNode> = order
            .iter()
            .map(|&id| {
                let o = &old[id];
                let mut members = o.members.clone();
                members.sort_unstable();
                StructureNode {
                    parent: o.parent.map(|p| new_id[p]),
                    children: o.children.iter().map(|&c| new_id[c]).collect(),
                    height: o.height,
                    leaf_count: 0,
                    members,
                    source: o.source,
                }
            })
            .collect();
        for id in (0..nodes.len()).rev() {
            let below: usize = nodes[id].children.iter().map(|&c| nodes[c].leaf_count).sum();
            nodes[id].leaf_count = nodes[id].members.len() + below;
        }
        Self {
            nodes,
            root: 0,
            mu,
            n_points,
        }
    }

    /// Assembles a structure tree from explicit parts, checking its
    /// invariants. Children are ordered by ascending id.
    pub fn from_parts(mu: usize, parents: &[Option<usize>], heights: &[f64], members: Vec<Vec<usize>>) -> Result<Self> {
        let m = parents.len();
        if m == 0 || heights.len() != m || members.len() != m {
            return Err(ShadeError::invalid("structure tree", "parts must be non-empty and of equal length"));
        }
        let roots: Vec<usize> = (0..m).filter(|&i| parents[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(ShadeError::invalid("structure tree", format!("{} roots", roots.len())));
        }
        let mut nodes: Vec<StructureNode> = (0..m)
            .map(|i| StructureNode {
                parent: parents[i],
                children: Vec::new(),
                height: heights[i],
                leaf_count: 0,
                members: members[i].clone(),
                source: None,
            })
            .collect();
        for i in 0..m {
            if let Some(p) = parents[i] {
                if p >= m || p == i {
                    return Err(ShadeError::invalid("structure tree", format!("node {i} has bad parent {p}")));
                }
                nodes[p].children.push(i);
            }
        }
        let n_points: usize = members.iter().map(Vec::len).sum();
        let mut seen = vec![false; n_points];
        for &p in members.iter().flatten() {
            if p >= n_points || std::mem::replace(&mut seen[p], true) {
                return Err(ShadeError::invalid(
                    "structure tree",
                    format!("member {p} is duplicated or out of range"),
                ));
            }
        }
        let tree = Self::reindexed(nodes, roots[0], mu, n_points);
        if tree.nodes.len() != m {
            return Err(ShadeError::invalid("structure tree", "parent links contain a cycle"));
        }
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        for (id, node) in self.nodes.iter().enumerate() {
            if !(node.height >= 0.0) || node.height.is_infinite() {
                return Err(ShadeError::invalid("structure tree", format!("node {id} has bad height")));
            }
            if let Some(p) = node.parent {
                if self.nodes[p].height < node.height {
                    return Err(ShadeError::invalid("structure tree", format!("node {id} is higher than its parent")));
                }
                if node.leaf_count < self.mu {
                    return Err(ShadeError::invalid(
                        "structure tree",
                        format!("node {id} holds {} < μ points", node.leaf_count),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn mu(&self) -> usize {
        self.mu
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn node(&self, id: usize) -> &StructureNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[StructureNode] {
        &self.nodes
    }

    /// Node ids with every parent before its children.
    pub fn preorder(&self) -> impl DoubleEndedIterator<Item = usize> {
        // ids are assigned in preorder
        0..self.nodes.len()
    }

    /// Every point in the subtree of `id`, sorted.
    pub fn subtree_members(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes[id].leaf_count);
        let mut stack = vec![id];
        while let Some(x) = stack.pop() {
            out.extend_from_slice(&self.nodes[x].members);
            stack.extend(&self.nodes[x].children);
        }
        out.sort_unstable();
        out
    }

    /// `(1/h − 1/h_parent) · leaf_count`, with a parent height of +∞ for
    /// the root.
    ///
    /// A node at its parent's height scores 0. Any other node at height 0
    /// (coincident points) scores `f64::INFINITY`, which compares above
    /// every finite score.
    pub fn stability(&self, id: usize) -> f64 {
        let node = &self.nodes[id];
        let h = node.height;
        let count = node.leaf_count as f64;
        match node.parent {
            Some(p) if self.nodes[p].height == h => 0.0,
            _ if h == 0.0 => f64::INFINITY,
            Some(p) => (1.0 / h - 1.0 / self.nodes[p].height) * count,
            None => count / h,
        }
    }

    pub fn stabilities(&self) -> Vec<StabilityScore> {
        (0..self.nodes.len())
            .map(|node| StabilityScore {
                node,
                stability: self.stability(node),
            })
            .collect()
    }

    /// Writes `node_id parent_id height leaf_count stability` lines, root
    /// parent as `-1`.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# node_id parent_id height leaf_count stability")?;
        for (id, node) in self.nodes.iter().enumerate() {
            let parent = node.parent.map_or(-1, |p| p as i64);
            writeln!(w, "{} {} {} {} {}", id, parent, node.height, node.leaf_count, self.stability(id))?;
        }
        Ok(())
    }
}
