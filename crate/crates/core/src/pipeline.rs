//! End-to-end fit: normalize, learn the embedding, cluster it.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::{znormalize, DataMatrix, Normalization};
use crate::dc::{dc_tree_for_points, DcTree};
use crate::error::{Result, ShadeError};
use crate::hierarchy::{assign_noise_1nn, build_structure_tree, extract_clusters, ClusterAssignment, StructureTree};
use crate::io::write_matrix;
use crate::metrics::MetricsReport;
use crate::nn::{init_autoencoder, train, write_loss_csv, EpochLoss, TrainConfig};

/// Size and root height of a dc-tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSummary {
    pub n_points: usize,
    pub root_height: f64,
}

impl TreeSummary {
    fn of(tree: &DcTree) -> Self {
        Self {
            n_points: tree.n_points(),
            root_height: tree.height(tree.root()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Everything a fit produces.
#[derive(Debug, Clone)]
pub struct ShadeResult {
    /// `n × embed_dim` encoder output for the normalized data.
    pub embedding: Array2<f64>,
    /// Stable clusters with noise.
    pub assignment: ClusterAssignment,
    /// `assignment` with every noise point given its nearest cluster in the
    /// embedding.
    pub assignment_1nn: ClusterAssignment,
    pub input_tree: TreeSummary,
    pub embedding_tree: DcTree,
    pub structure_tree: StructureTree,
    pub loss_history: Vec<EpochLoss>,
    pub normalization: Normalization,
    pub config: TrainConfig,
    pub metrics: MetricsReport,
    pub timings: Vec<StageTiming>,
}

struct Stopwatch {
    timings: Vec<StageTiming>,
}

impl Stopwatch {
    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(stage))?;
        self.timings.push(StageTiming {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }
}

/// Runs the full method on `data`.
///
/// The input dc-tree is built once on the normalized data and drives the
/// density loss; the clustering comes from a second dc-tree built on the
/// learned embedding with the same μ. Errors carry the failing stage name.
pub fn shade_fit(data: &DataMatrix, config: &TrainConfig) -> Result<ShadeResult> {
    let mut clock = Stopwatch { timings: Vec::new() };
    clock.run("validate", || {
        config.validate()?;
        let n = data.n_points();
        if n < 2 * config.mu {
            return Err(ShadeError::InsufficientPoints { needed: 2 * config.mu, got: n });
        }
        data.check_finite()
    })?;

    let (normalized, normalization) = clock.run("normalize", || znormalize(data, config.normalization))?;
    let input_tree = clock.run("input-dc-tree", || {
        let (_, mut tree) = dc_tree_for_points(normalized.features.view(), config.mu)?;
        tree.enable_dense_cache(config.dense_cache_threshold);
        Ok(tree)
    })?;
    let trained = clock.run("train", || {
        let mut state = init_autoencoder(normalized.n_features(), &config.hidden_dims, config.embed_dim, config.seed)?;
        train(&normalized, &input_tree, config, &mut state)
    })?;
    let input_summary = TreeSummary::of(&input_tree);
    drop(input_tree);

    let embedding = trained.embedding;
    let embedding_tree = clock.run("embedding-dc-tree", || Ok(dc_tree_for_points(embedding.view(), config.mu)?.1))?;
    let structure_tree = clock.run("structure-tree", || build_structure_tree(&embedding_tree, config.mu))?;
    let assignment = clock.run("extract", || Ok(extract_clusters(&structure_tree)))?;
    let assignment_1nn = clock.run("assign-noise", || assign_noise_1nn(embedding.view(), &assignment))?;
    let metrics = clock.run("metrics", || MetricsReport::new(data.labels.as_deref(), &assignment, &assignment_1nn))?;

    Ok(ShadeResult {
        embedding,
        assignment,
        assignment_1nn,
        input_tree: input_summary,
        embedding_tree,
        structure_tree,
        loss_history: trained.history,
        normalization,
        config: config.clone(),
        metrics,
        timings: clock.timings,
    })
}

impl ShadeResult {
    /// Writes the result files into `dir`, creating it if needed.
    ///
    /// `embedding.csv`, `labels.csv`, `labels_1nn.csv`, `losses.csv`,
    /// `metrics.json`, `config.json` and `timings.json` are always written;
    /// `embedding_tree.txt` and `structure_tree.txt` only with `dump_trees`.
    pub fn save(&self, dir: impl AsRef<Path>, dump_trees: bool) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let create = |name: &str| -> Result<BufWriter<File>> { Ok(BufWriter::new(File::create(dir.join(name))?)) };

        let mut w = create("embedding.csv")?;
        write_matrix(&mut w, self.embedding.view(), "z", None)?;
        w.flush()?;
        let mut w = create("labels.csv")?;
        self.assignment.write_csv(&mut w)?;
        w.flush()?;
        let mut w = create("labels_1nn.csv")?;
        self.assignment_1nn.write_csv(&mut w)?;
        w.flush()?;
        let mut w = create("losses.csv")?;
        write_loss_csv(&self.loss_history, &mut w)?;
        w.flush()?;
        write_json(dir.join("metrics.json"), &self.metrics)?;
        write_json(dir.join("config.json"), &self.config)?;
        write_json(dir.join("timings.json"), &self.timings)?;
        if dump_trees {
            let mut w = create("embedding_tree.txt")?;
            self.embedding_tree.write_dump(&mut w)?;
            w.flush()?;
            let mut w = create("structure_tree.txt")?;
            self.structure_tree.write_dump(&mut w)?;
            w.flush()?;
        }
        Ok(())
    }
}

/// Pretty-printed JSON with a trailing newline, fields in declaration order.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}
