//! Flat clusterings derived from a dc-tree.
//!
//! [`build_structure_tree`] condenses a dc-tree to the splits where both
//! sides hold at least μ points, [`extract_clusters`] picks the most stable
//! antichain of that tree, and [`cut_at_epsilon`] gives the fixed-ε
//! alternative. [`assign_noise_1nn`] turns a noisy labelling into a complete
//! one for comparisons against methods that never report noise.

mod assignment;
mod extract;
mod flat;
mod structure;

pub use assignment::{ClusterAssignment, NOISE};
pub use extract::{extract_clusters, select_clusters, Selection};
pub use flat::{assign_noise_1nn, cut_at_epsilon};
pub use structure::{build_structure_tree, StabilityScore, StructureNode, StructureTree};
