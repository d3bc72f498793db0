mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use algotag::ensemble::EnsembleScheme;
use algotag::models::ModelFamily;
use algotag::ErrorClass;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "algotag",
    version,
    about = "Predict algorithm tags of programming word problems"
)]
struct Cli {
    /// Seed for every random choice (splits, shuffles, initialization).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a raw problem dump into a clean corpus.
    Ingest(IngestArgs),
    /// Build a multilabel, multiclass or balanced dataset from a corpus.
    BuildDataset(BuildArgs),
    /// Print size, vocabulary and label statistics of a dataset.
    Stats(StatsArgs),
    /// Cross-validate a model and fit it on the whole dataset.
    Train(TrainArgs),
    /// Score a trained artifact on a dataset.
    Evaluate(EvaluateArgs),
    /// Cross-validate on one component of the problem text.
    Ablate(AblateArgs),
    /// Cross-validate on growing fractions of the dataset.
    Curve(CurveArgs),
    /// Cross-validate on randomly permuted labels.
    BaselineRandom(BaselineArgs),
    /// Cross-validate a grid of smoothing (mnb) or regularization (svm)
    /// values and report the best.
    Tune(TuneArgs),
    /// Predict the tags of problems with a trained artifact.
    Predict(PredictArgs),
    /// Re-run an experiment from its manifest and compare with its report.
    Rerun(RerunArgs),
}

#[derive(Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub raw: PathBuf,
    /// Comma-separated tags that do not name an algorithm.
    #[arg(long, value_delimiter = ',')]
    pub non_algorithmic: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BuildKind {
    Multilabel,
    Multiclass,
    Balanced,
}

#[derive(Args)]
pub struct BuildArgs {
    /// Raw dump or ingested corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum)]
    pub kind: BuildKind,
    #[arg(long)]
    pub top_k: usize,
    /// Problems per class (balanced datasets).
    #[arg(long)]
    pub per_class: Option<usize>,
    /// Size of the multilabel tag catalog the multiclass pool is drawn from.
    #[arg(long, default_value_t = 20)]
    pub source_top_k: usize,
    /// Classes of the multiclass dataset a balanced dataset is drawn from.
    #[arg(long, default_value_t = 10)]
    pub multiclass_top_k: usize,
    #[arg(long, value_delimiter = ',')]
    pub non_algorithmic: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Part {
    Full,
    Statement,
    Io,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scheme {
    MajorityVote,
    SumActivation,
}

impl From<Scheme> for EnsembleScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::MajorityVote => EnsembleScheme::MajorityVote,
            Scheme::SumActivation => EnsembleScheme::SumActivation,
        }
    }
}

fn parse_family(s: &str) -> Result<ModelFamily, String> {
    s.parse().map_err(|e: algotag::Error| e.to_string())
}

/// Dataset, model family and hyperparameters shared by the experiment
/// commands.
#[derive(Args, Clone)]
pub struct ModelArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// mnb, svm, mlp, cnn or cnn-ensemble.
    #[arg(long, value_parser = parse_family)]
    pub model: ModelFamily,
    /// Pretrained word vectors (text format) for the CNN families.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// TF-IDF weighting instead of raw counts for bag-of-words models.
    #[arg(long)]
    pub tfidf: bool,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 2)]
    pub min_count: usize,
    /// N-gram orders of the bag-of-words features.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub ngrams: Vec<usize>,
    /// Naive Bayes smoothing.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// SVM regularization strength.
    #[arg(long)]
    pub reg: Option<f64>,
    #[arg(long)]
    pub svm_epochs: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    /// Filters per convolution width.
    #[arg(long)]
    pub filters: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub widths: Option<Vec<usize>>,
    /// MLP hidden layer sizes.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// Keep pretrained embeddings fixed during training.
    #[arg(long)]
    pub freeze_embeddings: bool,
    #[arg(long)]
    pub members: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<Scheme>,
}

#[derive(Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Text part the model reads.
    #[arg(long, value_enum, default_value_t = Part::Full)]
    pub part: Part,
    /// Artifact path; the cross-validation report and manifest are written
    /// next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub artifact: PathBuf,
}

#[derive(Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub part: Part,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Training fractions in percent.
    #[arg(long, value_delimiter = ',', default_value = "25,50,75,100")]
    pub fractions: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Values to try; defaults to the built-in grid of the model family.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
}

#[derive(Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub artifact: PathBuf,
    /// One problem as a JSON object, or several as JSON lines. Tags are
    /// optional.
    #[arg(long)]
    pub problem: PathBuf,
}

#[derive(Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write the new outputs; by default the run is only compared
    /// with the report stored next to the manifest.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub struct Globals {
    pub seed: u64,
    pub format: Format,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<algotag::Error>()) {
        Some(e) => match e.class() {
            ErrorClass::InputFormat => 2,
            ErrorClass::Parameter => 3,
            ErrorClass::Divergence => 4,
        },
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
        {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let globals = Globals {
        seed: cli.seed,
        format: cli.format,
    };
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(&globals, a),
        Command::BuildDataset(a) => commands::build_dataset(&globals, a),
        Command::Stats(a) => commands::stats(&globals, a),
        Command::Train(a) => commands::train(&globals, a),
        Command::Evaluate(a) => commands::evaluate(&globals, a),
        Command::Ablate(a) => commands::ablate(&globals, a),
        Command::Curve(a) => commands::curve(&globals, a),
        Command::BaselineRandom(a) => commands::baseline(&globals, a),
        Command::Tune(a) => commands::tune(&globals, a),
        Command::Predict(a) => commands::predict(&globals, a),
        Command::Rerun(a) => commands::rerun(&globals, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
