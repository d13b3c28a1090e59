//! Joint representation learning and density-based clustering.
//!
//! The engine learns a low-dimensional embedding with an autoencoder whose
//! loss ties embedded Euclidean distances to the density-connectivity
//! distance of the input (the minimax path distance over the minimum
//! spanning tree of the mutual reachability graph). The embedding is then
//! clustered by condensing its own density-connectivity tree and selecting
//! the most stable flat clustering, which yields the number of clusters and
//! a noise labelling without further input.
//!
//! Module map:
//!
//! - [`dc`]: core distances, mutual reachability, MST and the dc-tree.
//! - [`hierarchy`]: structure tree, stability, extraction, ε-cuts, 1-nn noise
//!   reassignment.
//! - [`nn`]: autoencoder, losses, analytic gradients, Adam, training loop.
//! - [`pipeline`]: the end-to-end fit and its on-disk result layout.
//! - [`metrics`]: ARI, NMI, contingency tables and noise-aware evaluation.
//! - [`datasets`] and [`io`]: synthetic generators and CSV ingestion.

pub mod data;
pub mod datasets;
pub mod dc;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod metrics;
pub mod nn;
pub mod pipeline;

pub use data::{DataMatrix, Normalization, NormalizationMode};
pub use dc::{DcTree, DistanceContext, MstEdge};
pub use error::{Result, ShadeError};
pub use hierarchy::{ClusterAssignment, StructureTree, NOISE};
pub use nn::{AutoencoderState, TrainConfig};
pub use pipeline::{shade_fit, ShadeResult};
