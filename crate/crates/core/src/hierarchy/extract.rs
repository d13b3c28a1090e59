use super::assignment::{ClusterAssignment, NOISE};
use super::structure::StructureTree;

/// Outcome of the bottom-up stability pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Whether a node beats the best selection inside its subtree.
    pub flagged: Vec<bool>,
    /// Best total stability achievable inside each subtree.
    pub carried: Vec<f64>,
    /// Selected nodes in preorder.
    pub selected: Vec<usize>,
}

/// Chooses the antichain of structure nodes with the largest total
/// stability.
///
/// Leaves are always flagged. An internal node is flagged only when its own
/// stability strictly exceeds the best total of its descendants, so ties go
/// to the finer clustering. The selection is the first flagged node on each
/// root-to-leaf path.
pub fn select_clusters(tree: &StructureTree) -> Selection {
    let m = tree.len();
    let mut flagged = vec![false; m];
    let mut carried = vec![0.0; m];
    for id in tree.preorder().rev() {
        let node = tree.node(id);
        let own = tree.stability(id);
        if node.children.is_empty() {
            flagged[id] = true;
            carried[id] = own;
            continue;
        }
        let below: f64 = node.children.iter().map(|&c| carried[c]).sum();
        if own > below {
            flagged[id] = true;
            carried[id] = own;
        } else {
            carried[id] = below;
        }
    }

    let mut selected = Vec::new();
    let mut stack = vec![tree.root()];
    while let Some(id) = stack.pop() {
        if flagged[id] {
            selected.push(id);
        } else {
            stack.extend(tree.node(id).children.iter().rev());
        }
    }
    Selection {
        flagged,
        carried,
        selected,
    }
}

/// Labels each selected node's subtree with consecutive cluster ids in
/// preorder; points attached above every selected node become [`NOISE`].
pub fn extract_clusters(tree: &StructureTree) -> ClusterAssignment {
    let selection = select_clusters(tree);
    let mut labels = vec![NOISE; tree.n_points()];
    for (label, &id) in selection.selected.iter().enumerate() {
        for p in tree.subtree_members(id) {
            labels[p] = label as i64;
        }
    }
    ClusterAssignment::new_unchecked(labels, selection.selected.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_root_is_one_cluster_without_noise() {
        let t = StructureTree::from_parts(3, &[None], &[1.0], vec![(0..7).collect()]).unwrap();
        let a = extract_clusters(&t);
        assert_eq!(a.k(), 1);
        assert_eq!(a.n_noise(), 0);
    }

    #[test]
    fn stable_children_leave_root_members_as_noise() {
        // root stability 10/4 = 2.5, children (1 - 0.25) * 4 = 3 each
        let t = StructureTree::from_parts(
            2,
            &[None, Some(0), Some(0)],
            &[4.0, 1.0, 1.0],
            vec![vec![0, 1], vec![2, 3, 4, 5], vec![6, 7, 8, 9]],
        )
        .unwrap();
        let s = select_clusters(&t);
        assert_eq!(s.selected, vec![1, 2]);
        assert!(!s.flagged[0]);
        assert_eq!(s.carried[0], 6.0);
        let a = extract_clusters(&t);
        assert_eq!(a.labels(), &[-1, -1, 0, 0, 0, 0, 1, 1, 1, 1]);
    }

    #[test]
    fn stable_root_wins_over_weak_children() {
        // root 10/1 = 10 beats children (1/0.5 - 1) * 4 = 4 each
        let t = StructureTree::from_parts(
            2,
            &[None, Some(0), Some(0)],
            &[1.0, 0.5, 0.5],
            vec![vec![0, 1], vec![2, 3, 4, 5], vec![6, 7, 8, 9]],
        )
        .unwrap();
        let a = extract_clusters(&t);
        assert_eq!(a.k(), 1);
        assert_eq!(a.n_noise(), 0);
    }

    #[test]
    fn ties_prefer_the_children() {
        // root 8/2 = 4, children (1 - 0.5) * 4 = 2 each
        let t = StructureTree::from_parts(
            2,
            &[None, Some(0), Some(0)],
            &[2.0, 1.0, 1.0],
            vec![vec![], vec![0, 1, 2, 3], vec![4, 5, 6, 7]],
        )
        .unwrap();
        assert_eq!(select_clusters(&t).selected, vec![1, 2]);
    }

    /// Random tree whose heights are powers of two, so every stability is an
    /// exactly representable dyadic rational.
    pub(crate) fn dyadic_tree(seed: u64, max_nodes: usize) -> StructureTree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(1..=max_nodes);
        let mut parents = vec![None];
        let mut exps = vec![rng.random_range(0..3i32)];
        for i in 1..m {
            let p = rng.random_range(0..i);
            parents.push(Some(p));
            exps.push(exps[p] + rng.random_range(0..3));
        }
        let mut has_child = vec![false; m];
        for p in parents.iter().flatten() {
            has_child[*p] = true;
        }
        let mut next = 0;
        let members = (0..m)
            .map(|i| {
                let k = if has_child[i] { rng.random_range(0..3) } else { rng.random_range(2..5) };
                let v: Vec<usize> = (next..next + k).collect();
                next += k;
                v
            })
            .collect();
        let heights: Vec<f64> = exps.iter().map(|&e| 2f64.powi(-e)).collect();
        StructureTree::from_parts(2, &parents, &heights, members).unwrap()
    }

    /// Best total stability over all antichains, by enumeration.
    fn best_antichain(t: &StructureTree) -> f64 {
        let m = t.len();
        let ancestors: Vec<u32> = (0..m)
            .map(|i| {
                let mut mask = 0u32;
                let mut cur = t.node(i).parent;
                while let Some(p) = cur {
                    mask |= 1 << p;
                    cur = t.node(p).parent;
                }
                mask
            })
            .collect();
        let mut best = 0.0f64;
        for set in 1u32..(1 << m) {
            let ok = (0..m).all(|i| set & (1 << i) == 0 || set & ancestors[i] == 0);
            if ok {
                let s: f64 = (0..m).filter(|&i| set & (1 << i) != 0).map(|i| t.stability(i)).sum();
                best = best.max(s);
            }
        }
        best
    }

    proptest! {
        #[test]
        fn selection_matches_exhaustive_search(seed in any::<u64>()) {
            let t = dyadic_tree(seed, 12);
            let s = select_clusters(&t);
            let total: f64 = s.selected.iter().map(|&i| t.stability(i)).sum();
            prop_assert_eq!(total, best_antichain(&t));
            prop_assert_eq!(total, s.carried[t.root()]);
        }

        #[test]
        fn selection_is_an_antichain_covering_every_leaf(seed in any::<u64>()) {
            let t = dyadic_tree(seed, 16);
            let s = select_clusters(&t);
            for leaf in (0..t.len()).filter(|&i| t.node(i).children.is_empty()) {
                let mut hits = 0;
                let mut cur = Some(leaf);
                while let Some(x) = cur {
                    hits += usize::from(s.selected.contains(&x));
                    cur = t.node(x).parent;
                }
                prop_assert_eq!(hits, 1);
            }
            let a = extract_clusters(&t);
            prop_assert_eq!(a.k(), s.selected.len());
            let clustered = a.len() - a.n_noise();
            let expected: usize = s.selected.iter().map(|&i| t.node(i).leaf_count).sum();
            prop_assert_eq!(clustered, expected);
        }
    }
}
