//! `shade` command-line interface.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 when the data or the
//! computation fails.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shade::datasets::{DatasetSpec, Generator};
use shade::hierarchy::{assign_noise_1nn, cut_at_epsilon};
use shade::io::{load_csv, save_csv, LabelColumn};
use shade::metrics::MetricsReport;
use shade::pipeline::write_json;
use shade::{shade_fit, ClusterAssignment, DcTree, NormalizationMode, ShadeError, TrainConfig};

#[derive(Parser)]
#[command(name = "shade", version, about = "Density-connectivity autoencoder clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset as CSV with a `label` column.
    Generate(GenerateArgs),
    /// Train on a CSV file and write the result directory.
    Fit(FitArgs),
    /// Score a labelling against ground truth and write metrics JSON.
    Evaluate(EvaluateArgs),
    /// Cut a dc-tree dump at a fixed ε.
    Cut(CutArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GeneratorName {
    RingsS,
    BlobsNoise,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "rings-s")]
    generator: GeneratorName,
    #[arg(long, default_value_t = 1500)]
    n: usize,
    /// Background noise fraction (blobs only).
    #[arg(long, default_value_t = 0.0)]
    noise_ratio: f64,
    /// Dimensionality (blobs only; the rings data is always 3d).
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Jitter deviation of the rings and S data.
    #[arg(long, default_value_t = 0.05)]
    noise_sigma: f64,
    /// Number of blobs.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Standard deviation of each blob.
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizationArg {
    FeatureWise,
    Global,
    None,
}

impl From<NormalizationArg> for NormalizationMode {
    fn from(n: NormalizationArg) -> Self {
        match n {
            NormalizationArg::FeatureWise => NormalizationMode::FeatureWise,
            NormalizationArg::Global => NormalizationMode::Global,
            NormalizationArg::None => NormalizationMode::None,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV; a header row is optional.
    #[arg(long, short)]
    input: PathBuf,
    /// Ground-truth label column, by header name or 0-based index.
    #[arg(long)]
    label_column: Option<LabelColumn>,
    /// Output directory; with `--seeds` one `seed_<s>` subdirectory per run.
    #[arg(long, short)]
    out: PathBuf,
    /// Also write `embedding_tree.txt` and `structure_tree.txt`.
    #[arg(long)]
    dump_trees: bool,
    /// JSON file with a full or partial configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    mu: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    lambda_rec: Option<f64>,
    #[arg(long)]
    lambda_d: Option<f64>,
    /// Comma-separated hidden layer widths; an empty string means none.
    #[arg(long, value_parser = parse_dims)]
    hidden_dims: Option<Dims>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run every seed in a half-open range `a..b`.
    #[arg(long, value_parser = parse_seeds, conflicts_with = "seed")]
    seeds: Option<Range<u64>>,
    #[arg(long)]
    dense_cache_threshold: Option<usize>,
    #[arg(long)]
    pretrain_epochs: Option<usize>,
    #[arg(long)]
    normalize_ddc: bool,
    #[arg(long, value_enum)]
    normalization: Option<NormalizationArg>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted labels; any CSV with a `label` column, negative labels are noise.
    #[arg(long)]
    labels: PathBuf,
    /// Ground truth; any CSV holding the truth column.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value = "label")]
    truth_column: LabelColumn,
    /// Noise-free labelling for the 1-nn scores.
    #[arg(long, conflicts_with = "embedding")]
    labels_1nn: Option<PathBuf>,
    /// Embedding used to assign noise points to their nearest cluster.
    #[arg(long)]
    embedding: Option<PathBuf>,
    #[arg(long, short, default_value = "metrics.json")]
    out: PathBuf,
}

#[derive(Args)]
struct CutArgs {
    /// dc-tree dump as written by `fit --dump-trees`.
    #[arg(long)]
    tree: PathBuf,
    #[arg(long)]
    epsilon: f64,
    /// Smallest component kept as a cluster.
    #[arg(long, default_value_t = 5)]
    mu: usize,
    #[arg(long, short, default_value = "labels.csv")]
    out: PathBuf,
}

#[derive(Clone)]
struct Dims(Vec<usize>);

fn parse_dims(s: &str) -> Result<Dims, String> {
    if s.trim().is_empty() {
        return Ok(Dims(Vec::new()));
    }
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()
        .map(Dims)
}

fn parse_seeds(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected `a..b`")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
    if a >= b {
        return Err(format!("empty seed range {a}..{b}"));
    }
    Ok(a..b)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Fit(a) => fit(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Cut(a) => cut(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}

fn generate(a: GenerateArgs) -> shade::Result<()> {
    let (generator, d) = match a.generator {
        GeneratorName::RingsS => (Generator::RingsS { noise_sigma: a.noise_sigma }, a.d.unwrap_or(3)),
        GeneratorName::BlobsNoise => (Generator::BlobsNoise { k: a.k, spread: a.spread }, a.d.unwrap_or(2)),
    };
    let spec = DatasetSpec {
        generator,
        n: a.n,
        noise_ratio: a.noise_ratio,
        d,
        seed: a.seed,
    };
    let data = spec.generate()?;
    create_parent(&a.out)?;
    save_csv(&a.out, &data)
}

fn fit(a: FitArgs) -> shade::Result<()> {
    let mut config = match &a.config {
        Some(path) => serde_json::from_reader(BufReader::new(open(path)?))?,
        None => TrainConfig::default(),
    };
    let overrides = [
        (a.mu, &mut config.mu),
        (a.batch_size, &mut config.batch_size),
        (a.embed_dim, &mut config.embed_dim),
        (a.epochs, &mut config.epochs),
        (a.dense_cache_threshold, &mut config.dense_cache_threshold),
        (a.pretrain_epochs, &mut config.pretrain_epochs),
    ];
    for (value, slot) in overrides {
        if let Some(v) = value {
            *slot = v;
        }
    }
    for (value, slot) in [
        (a.learning_rate, &mut config.learning_rate),
        (a.lambda_rec, &mut config.lambda_rec),
        (a.lambda_d, &mut config.lambda_d),
    ] {
        if let Some(v) = value {
            *slot = v;
        }
    }
    if let Some(Dims(dims)) = a.hidden_dims {
        config.hidden_dims = dims;
    }
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if a.normalize_ddc {
        config.normalize_ddc = true;
    }
    if let Some(n) = a.normalization {
        config.normalization = n.into();
    }
    config.validate()?;

    let data = load_csv(&a.input, a.label_column.as_ref())?;
    let runs: Vec<(u64, PathBuf)> = match &a.seeds {
        Some(range) => range.clone().map(|s| (s, a.out.join(format!("seed_{s}")))).collect(),
        None => vec![(config.seed, a.out.clone())],
    };
    for (seed, dir) in runs {
        let run = TrainConfig { seed, ..config.clone() };
        let result = shade_fit(&data, &run)?;
        result.save(&dir, a.dump_trees)?;
        let m = &result.metrics;
        let score = m.ari_1nn.map_or(String::new(), |v| format!(" ari_1nn={v:.4}"));
        eprintln!(
            "seed {seed}: k={} noise_ratio={:.4}{score} -> {}",
            m.k_detected,
            m.noise_ratio,
            dir.display()
        );
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> shade::Result<()> {
    let label = LabelColumn::Name("label".into());
    let predicted = ClusterAssignment::canonicalize(load_csv(&a.labels, Some(&label))?.labels.as_deref().unwrap_or_default());
    let truth = load_csv(&a.truth, Some(&a.truth_column))?.labels.unwrap_or_default();
    if truth.len() != predicted.len() {
        return Err(ShadeError::ShapeMismatch(format!(
            "{} truth labels for {} predicted labels",
            truth.len(),
            predicted.len()
        )));
    }
    let completed = match (&a.labels_1nn, &a.embedding) {
        (Some(path), _) => Some(ClusterAssignment::canonicalize(
            load_csv(path, Some(&label))?.labels.as_deref().unwrap_or_default(),
        )),
        (None, Some(path)) => Some(assign_noise_1nn(load_csv(path, None)?.features.view(), &predicted)?),
        (None, None) if predicted.n_noise() == 0 => Some(predicted.clone()),
        (None, None) => None,
    };
    let report = match &completed {
        Some(c) => MetricsReport::new(Some(&truth), &predicted, c)?,
        None => {
            let mut r = MetricsReport::new(Some(&truth), &predicted, &predicted)?;
            r.ari_1nn = None;
            r.nmi_1nn = None;
            r
        }
    };
    create_parent(&a.out)?;
    write_json(&a.out, &report)
}

fn cut(a: CutArgs) -> shade::Result<()> {
    let tree = DcTree::parse_dump(BufReader::new(open(&a.tree)?))?;
    let assignment = cut_at_epsilon(&tree, a.epsilon, a.mu)?;
    create_parent(&a.out)?;
    let mut w = BufWriter::new(File::create(&a.out)?);
    assignment.write_csv(&mut w)?;
    w.flush()?;
    eprintln!("k={} noise_ratio={:.4}", assignment.k(), assignment.noise_ratio());
    Ok(())
}

fn open(path: &Path) -> std::io::Result<File> {
    File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn create_parent(path: &Path) -> std::io::Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => fs::create_dir_all(p),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_dims_parse() {
        assert_eq!(parse_dims("256, 128").unwrap().0, vec![256, 128]);
        assert!(parse_dims("").unwrap().0.is_empty());
        assert!(parse_dims("8,x").is_err());
    }

    #[test]
    fn seed_ranges_are_half_open() {
        assert_eq!(parse_seeds("0..10").unwrap(), 0..10);
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("3").is_err());
    }

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from(["shade", "fit", "-i", "x.csv", "-o", "o", "--mu", "7", "--hidden-dims", "4"]).unwrap();
        let Command::Fit(a) = cli.command else { panic!("not fit") };
        assert_eq!(a.mu, Some(7));
        assert_eq!(a.hidden_dims.unwrap().0, vec![4]);
        assert!(Cli::try_parse_from(["shade", "fit", "-i", "x", "-o", "o", "--seed", "1", "--seeds", "0..2"]).is_err());
    }
}
