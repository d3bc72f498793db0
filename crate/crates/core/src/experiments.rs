//! Cross-validated experiments: plain runs, the random-label baseline,
//! component ablations with category breakdowns, and learning curves.
//! Every run is a pure function of (dataset, spec, folds, seed) and can be
//! recorded in a manifest and replayed.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{write_atomic, Problem, TextPart};
use crate::datasets::{
    kfold_split, read_dataset, sha256_hex, shuffle_labels, subsample_fraction, DatasetKind,
    FoldPlan, LabeledDataset, PROBLEMS_FILE,
};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::features::PretrainedVectors;
use crate::metrics::{
    category_indices, category_scores, confusion_matrix, ConfusionMatrix, FoldScores,
    MetricsReport, Scores, HUMAN_REFERENCE_F1_MACRO, HUMAN_REFERENCE_F1_MICRO, PROBLEM_CATEGORY,
    SOLUTION_CATEGORY,
};
use crate::models::{load_pretrained, train_model, ModelFamily, ModelSpec, TrainedModel};
use crate::plots::{curve_svg, Series};

pub const DEFAULT_FOLDS: usize = 10;
pub const DEFAULT_FRACTIONS: [f64; 4] = [25.0, 50.0, 75.0, 100.0];
pub const MANIFEST_FORMAT_VERSION: u32 = 1;

/// Trains the model of one fold on that fold's training items only.
pub fn fit_fold(
    dataset: &LabeledDataset,
    plan: &FoldPlan,
    fold: usize,
    spec: &ModelSpec,
    pretrained: Option<&PretrainedVectors>,
    seed: u64,
) -> Result<TrainedModel> {
    let train = dataset.subset(&plan.train_indices(fold));
    train_model(&train, spec, pretrained, derive_seed(seed, fold as u64))
}

/// Outcome of one cross-validated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRun {
    pub report: MetricsReport,
    /// Out-of-fold predicted label sets in dataset order.
    pub predictions: Vec<Vec<usize>>,
    /// Training-loss trace of each fold's (first) network; empty for the
    /// bag-of-words families.
    pub loss_traces: Vec<Vec<f64>>,
}

/// k-fold cross-validation. Features are refit on each training fold; folds
/// run in parallel on the current rayon pool and the first failing fold (by
/// index) aborts the run.
pub fn run_cv(
    dataset: &LabeledDataset,
    spec: &ModelSpec,
    pretrained: Option<&PretrainedVectors>,
    folds: usize,
    seed: u64,
    label: &str,
) -> Result<CvRun> {
    dataset.validate()?;
    let plan = kfold_split(dataset, folds, seed)?;
    let outcomes: Vec<Result<(Vec<usize>, Vec<Vec<usize>>, Vec<f64>)>> = (0..folds)
        .into_par_iter()
        .map(|fold| {
            let model = fit_fold(dataset, &plan, fold, spec, pretrained, seed)?;
            let test = plan.test_indices(fold);
            let problems: Vec<&Problem> = test.iter().map(|&i| &dataset.items[i].problem).collect();
            let predictions = model.predict(&problems)?;
            let trace = model.members()[0].loss_trace.clone();
            log::info!("{label}: fold {} of {folds} done", fold + 1);
            Ok((test, predictions, trace))
        })
        .collect();
    let n_labels = dataset.n_classes();
    let truth = dataset.label_sets();
    let mut predictions = vec![Vec::new(); dataset.len()];
    let mut fold_scores = Vec::with_capacity(folds);
    let mut loss_traces = Vec::with_capacity(folds);
    for (fold, outcome) in outcomes.into_iter().enumerate() {
        let (test, preds, trace) = outcome.map_err(|e| Error::Fold {
            fold,
            source: Box::new(e),
        })?;
        let fold_truth: Vec<Vec<usize>> = test.iter().map(|&i| truth[i].clone()).collect();
        fold_scores.push(FoldScores {
            fold,
            n_items: test.len(),
            scores: Scores::compute(dataset.kind, &fold_truth, &preds, n_labels)?,
        });
        for (&i, p) in test.iter().zip(preds) {
            predictions[i] = p;
        }
        loss_traces.push(trace);
    }
    let all: Vec<Scores> = fold_scores.iter().map(|f| f.scores).collect();
    let report = MetricsReport {
        label: label.to_string(),
        kind: dataset.kind,
        mean: Scores::mean(&all)?,
        pooled: Scores::compute(dataset.kind, &truth, &predictions, n_labels)?,
        folds: fold_scores,
    };
    Ok(CvRun {
        report,
        predictions,
        loss_traces,
    })
}

/// Cross-validation on a seeded permutation of the item → label mapping.
pub fn run_random_baseline(
    dataset: &LabeledDataset,
    spec: &ModelSpec,
    pretrained: Option<&PretrainedVectors>,
    folds: usize,
    seed: u64,
) -> Result<CvRun> {
    let shuffled = shuffle_labels(dataset, seed);
    if shuffled.class_histogram() != dataset.class_histogram() {
        return Err(Error::Shape(
            "label shuffling changed the class histogram".into(),
        ));
    }
    run_cv(
        &shuffled,
        spec,
        pretrained,
        folds,
        seed,
        &format!("{} random labels", spec.label()),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub category: String,
    /// Catalog labels that belong to the category.
    pub labels: usize,
    pub f1_micro: Option<f64>,
    pub f1_macro: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRun {
    pub part: TextPart,
    pub cv: CvRun,
    pub categories: Vec<CategoryScore>,
    /// Pooled out-of-fold confusion matrix (multiclass data).
    pub confusion: Option<ConfusionMatrix>,
}

impl AblationRun {
    /// Category block in the layout solution / problem / all.
    pub fn categories_text(&self) -> String {
        let mut out = format!(
            "{:<10}{:>8}{:>12}{:>12}\n",
            "category", "labels", "f1_micro", "f1_macro"
        );
        let pct =
            |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{:.2}", v * 100.0));
        for c in &self.categories {
            out.push_str(&format!(
                "{:<10}{:>8}{:>12}{:>12}\n",
                c.category,
                c.labels,
                pct(c.f1_micro),
                pct(c.f1_macro)
            ));
        }
        out.push_str(&format!(
            "human reference: f1_micro {:.1}, f1_macro {:.1}\n",
            HUMAN_REFERENCE_F1_MICRO * 100.0,
            HUMAN_REFERENCE_F1_MACRO * 100.0
        ));
        out
    }
}

/// Category scores of pooled predictions: solution tags, problem tags and
/// the whole catalog.
pub fn category_breakdown(
    dataset: &LabeledDataset,
    predictions: &[Vec<usize>],
) -> Result<Vec<CategoryScore>> {
    let truth = dataset.label_sets();
    let n = dataset.n_classes();
    let catalog = dataset.catalog.tags();
    let groups = [
        ("solution", category_indices(catalog, &SOLUTION_CATEGORY)),
        ("problem", category_indices(catalog, &PROBLEM_CATEGORY)),
        ("all", (0..n).collect()),
    ];
    groups
        .into_iter()
        .map(|(name, set)| {
            let scores = if set.is_empty() {
                None
            } else {
                category_scores(&truth, predictions, &set, n)?
            };
            Ok(CategoryScore {
                category: name.to_string(),
                labels: set.len(),
                f1_micro: scores.map(|s| s.0),
                f1_macro: scores.map(|s| s.1),
            })
        })
        .collect()
}

/// Cross-validation on one component of the problem text.
pub fn run_ablation(
    dataset: &LabeledDataset,
    spec: &ModelSpec,
    part: TextPart,
    pretrained: Option<&PretrainedVectors>,
    folds: usize,
    seed: u64,
) -> Result<AblationRun> {
    let mut spec = spec.clone();
    spec.text_part = part;
    let label = format!("{} on {part} text", spec.label());
    let cv = run_cv(dataset, &spec, pretrained, folds, seed, &label)?;
    let categories = category_breakdown(dataset, &cv.predictions)?;
    let confusion = match dataset.kind {
        DatasetKind::Multiclass => Some(confusion_matrix(
            &dataset.classes(),
            &cv.predictions.iter().map(|p| p[0]).collect::<Vec<_>>(),
            dataset.n_classes(),
        )?),
        DatasetKind::Multilabel => None,
    };
    Ok(AblationRun {
        part,
        cv,
        categories,
        confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub percent: f64,
    pub size: usize,
    pub report: MetricsReport,
}

/// One cross-validated run per training fraction on nested subsamples.
pub fn run_learning_curve(
    dataset: &LabeledDataset,
    spec: &ModelSpec,
    fractions: &[f64],
    pretrained: Option<&PretrainedVectors>,
    folds: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if fractions.is_empty() {
        return Err(Error::param("fractions", "need at least one"));
    }
    let mut sorted = fractions.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    sorted
        .iter()
        .map(|&percent| {
            let subset = subsample_fraction(dataset, percent, seed)?;
            let label = format!("{} on {percent}% of the data", spec.label());
            let cv = run_cv(&subset, spec, pretrained, folds, seed, &label)?;
            Ok(CurvePoint {
                percent,
                size: subset.len(),
                report: cv.report,
            })
        })
        .collect()
}

/// Mean fold scores against the training fraction; hamming loss, when
/// present, goes on the right axis.
pub fn learning_curve_svg(points: &[CurvePoint], title: &str) -> String {
    let xs: Vec<f64> = points.iter().map(|p| p.percent).collect();
    let names: Vec<&str> = points
        .first()
        .map(|p| p.report.mean.values().iter().map(|(k, _)| *k).collect())
        .unwrap_or_default();
    let series: Vec<Series> = names
        .iter()
        .map(|&name| Series {
            name: name.to_string(),
            values: points
                .iter()
                .map(|p| p.report.mean.get(name).unwrap_or(0.0))
                .collect(),
            right_axis: name == "hamming_loss",
        })
        .collect();
    curve_svg(title, "percent of training data", &xs, &series)
}

/// What an experiment computes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentKind {
    Cv,
    RandomBaseline,
    Ablation { part: TextPart },
    LearningCurve { fractions: Vec<f64> },
}

/// Inputs, seeds and versions that fully determine an experiment's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub format_version: u32,
    pub tool_version: String,
    #[serde(flatten)]
    pub kind: ExperimentKind,
    pub dataset: PathBuf,
    pub dataset_sha256: String,
    pub spec: ModelSpec,
    pub embeddings_sha256: Option<String>,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "output", rename_all = "snake_case")]
pub enum ExperimentOutput {
    Cv(CvRun),
    Ablation(AblationRun),
    LearningCurve { points: Vec<CurvePoint> },
}

impl ExperimentOutput {
    pub fn reports(&self) -> Vec<&MetricsReport> {
        match self {
            ExperimentOutput::Cv(cv) => vec![&cv.report],
            ExperimentOutput::Ablation(a) => vec![&a.cv.report],
            ExperimentOutput::LearningCurve { points } => {
                points.iter().map(|p| &p.report).collect()
            }
        }
    }
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

impl ExperimentManifest {
    /// Manifest for a dataset directory, hashing its problem file and the
    /// embeddings the spec names.
    pub fn new(
        kind: ExperimentKind,
        dataset_dir: &Path,
        spec: ModelSpec,
        folds: usize,
        seed: u64,
    ) -> Result<Self> {
        let embeddings_sha256 = match &spec.embeddings {
            Some(p) if spec.family.uses_sequences() => Some(file_sha256(p)?),
            _ => None,
        };
        Ok(ExperimentManifest {
            format_version: MANIFEST_FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            kind,
            dataset: dataset_dir.to_path_buf(),
            dataset_sha256: file_sha256(&dataset_dir.join(PROBLEMS_FILE))?,
            spec,
            embeddings_sha256,
            folds,
            seed,
        })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: ExperimentManifest =
            serde_json::from_str(&text).map_err(|e| Error::Malformed {
                line: e.line(),
                message: format!("{}: {e}", path.display()),
            })?;
        if manifest.format_version != MANIFEST_FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "{}: unsupported manifest version {}",
                path.display(),
                manifest.format_version
            )));
        }
        Ok(manifest)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let json =
            serde_json::to_string_pretty(self).map_err(|e| Error::Artifact(e.to_string()))?;
        write_atomic(path.as_ref(), format!("{json}\n").as_bytes())
    }

    /// Loads the dataset and vectors after checking them against the
    /// recorded hashes, then runs the experiment.
    pub fn run(&self) -> Result<ExperimentOutput> {
        let actual = file_sha256(&self.dataset.join(PROBLEMS_FILE))?;
        if actual != self.dataset_sha256 {
            return Err(Error::Artifact(format!(
                "dataset {} changed since the manifest was written",
                self.dataset.display()
            )));
        }
        if let (Some(path), Some(expected)) = (&self.spec.embeddings, &self.embeddings_sha256) {
            if &file_sha256(path)? != expected {
                return Err(Error::Artifact(format!(
                    "embeddings {} changed",
                    path.display()
                )));
            }
        }
        let (dataset, _) = read_dataset(&self.dataset)?;
        let problems = dataset.labeled_problems();
        let pretrained = load_pretrained(&self.spec, &problems)?;
        run_experiment(
            &self.kind,
            &dataset,
            &self.spec,
            pretrained.as_ref(),
            self.folds,
            self.seed,
        )
    }
}

pub fn run_experiment(
    kind: &ExperimentKind,
    dataset: &LabeledDataset,
    spec: &ModelSpec,
    pretrained: Option<&PretrainedVectors>,
    folds: usize,
    seed: u64,
) -> Result<ExperimentOutput> {
    Ok(match kind {
        ExperimentKind::Cv => ExperimentOutput::Cv(run_cv(
            dataset,
            spec,
            pretrained,
            folds,
            seed,
            &spec.label(),
        )?),
        ExperimentKind::RandomBaseline => {
            ExperimentOutput::Cv(run_random_baseline(dataset, spec, pretrained, folds, seed)?)
        }
        ExperimentKind::Ablation { part } => {
            ExperimentOutput::Ablation(run_ablation(dataset, spec, *part, pretrained, folds, seed)?)
        }
        ExperimentKind::LearningCurve { fractions } => ExperimentOutput::LearningCurve {
            points: run_learning_curve(dataset, spec, fractions, pretrained, folds, seed)?,
        },
    })
}

/// Score one grid value is judged by: accuracy on multiclass data, micro F1
/// on multilabel data.
pub fn primary_score(report: &MetricsReport) -> f64 {
    let name = match report.kind {
        DatasetKind::Multiclass => "accuracy",
        DatasetKind::Multilabel => "f1_micro",
    };
    report.mean.get(name).unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub value: f64,
    pub report: MetricsReport,
}

/// Cross-validates every value of the smoothing (naive Bayes) or
/// regularization (SVM) grid and returns the best value with all points.
/// Ties keep the earlier grid value.
pub fn grid_search(
    dataset: &LabeledDataset,
    spec: &ModelSpec,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<(f64, Vec<GridPoint>)> {
    if grid.is_empty() {
        return Err(Error::param("grid", "need at least one value"));
    }
    let mut points = Vec::with_capacity(grid.len());
    for &value in grid {
        let mut spec = spec.clone();
        let name = match spec.family {
            ModelFamily::Mnb => {
                spec.alpha = value;
                "alpha"
            }
            ModelFamily::Svm => {
                spec.svm.reg = value;
                "reg"
            }
            other => {
                return Err(Error::param(
                    "model",
                    format!("grid search covers mnb and svm, not {other}"),
                ))
            }
        };
        let label = format!("{} {name}={value}", spec.label());
        let cv = run_cv(dataset, &spec, None, folds, seed, &label)?;
        points.push(GridPoint {
            value,
            report: cv.report,
        });
    }
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if primary_score(&p.report) > primary_score(&points[best].report) {
            best = i;
        }
    }
    Ok((points[best].value, points))
}
