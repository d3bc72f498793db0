use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use algotag::corpus::{parse_corpus, parse_record, write_atomic, write_corpus, Problem, TextPart};
use algotag::datasets::{
    dataset_stats, default_non_algorithmic, filter_raw, read_dataset, replay_recipe, sha256_hex,
    write_dataset, DatasetManifest, RecipeStep, DATASET_FORMAT_VERSION, MANIFEST_FILE,
};
use algotag::experiments::{
    grid_search, learning_curve_svg, primary_score, ExperimentKind, ExperimentManifest,
    ExperimentOutput,
};
use algotag::features::Tokenizer;
use algotag::linear_models::{ALPHA_GRID, REG_GRID};
use algotag::metrics::{FoldScores, MetricsReport, Scores};
use algotag::models::{
    load_model, load_pretrained, save_model, train_model, ModelFamily, ModelSpec, Weighting,
};
use algotag::plots::confusion_svg;
use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use crate::{
    AblateArgs, BaselineArgs, BuildArgs, BuildKind, CurveArgs, EvaluateArgs, Format, Globals,
    IngestArgs, ModelArgs, Part, PredictArgs, RerunArgs, StatsArgs, TrainArgs, TuneArgs,
};

const REPORT_JSON: &str = "report.json";
const REPORT_TEXT: &str = "report.txt";

fn emit(globals: &Globals, text: &str, value: &Value) -> Result<()> {
    match globals.format {
        Format::Text => print!("{text}"),
        Format::Structured => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    write_atomic(path, format!("{json}\n").as_bytes())?;
    Ok(())
}

fn non_algorithmic(list: &Option<Vec<String>>) -> BTreeSet<String> {
    match list {
        Some(tags) => tags
            .iter()
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .collect(),
        None => default_non_algorithmic(),
    }
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| algotag::Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn ingest(globals: &Globals, args: IngestArgs) -> Result<()> {
    let raw = parse_corpus(&args.raw)?;
    let kept = filter_raw(&raw, &non_algorithmic(&args.non_algorithmic));
    write_corpus(&args.out, &kept)?;
    let sidecar = json!({
        "source": args.raw,
        "source_sha256": file_sha256(&args.raw)?,
        "non_algorithmic": non_algorithmic(&args.non_algorithmic),
        "raw_problems": raw.len(),
        "kept_problems": kept.len(),
    });
    let mut sidecar_path = args.out.clone().into_os_string();
    sidecar_path.push(".manifest.json");
    write_json(Path::new(&sidecar_path), &sidecar)?;
    let text = format!(
        "read {} problems, kept {}, wrote {}\n",
        raw.len(),
        kept.len(),
        args.out.display()
    );
    emit(globals, &text, &sidecar)
}

pub fn build_dataset(globals: &Globals, args: BuildArgs) -> Result<()> {
    let raw = parse_corpus(&args.corpus)?;
    let mut recipe = vec![RecipeStep::FilterRaw {
        non_algorithmic: non_algorithmic(&args.non_algorithmic).into_iter().collect(),
    }];
    match args.kind {
        BuildKind::Multilabel => recipe.push(RecipeStep::Multilabel { top_k: args.top_k }),
        BuildKind::Multiclass => {
            recipe.push(RecipeStep::Multilabel {
                top_k: args.source_top_k,
            });
            recipe.push(RecipeStep::Multiclass { top_k: args.top_k });
        }
        BuildKind::Balanced => {
            let Some(per_class) = args.per_class else {
                return Err(algotag::Error::param(
                    "per-class",
                    "balanced datasets need --per-class",
                )
                .into());
            };
            recipe.push(RecipeStep::Multilabel {
                top_k: args.source_top_k,
            });
            recipe.push(RecipeStep::Multiclass {
                top_k: args.multiclass_top_k,
            });
            recipe.push(RecipeStep::Balanced {
                top_k: args.top_k,
                per_class,
                seed: globals.seed,
            });
        }
    }
    let dataset = replay_recipe(&raw, &recipe)?;
    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        kind: dataset.kind,
        catalog: dataset.catalog.tags().to_vec(),
        size: dataset.len(),
        source: Some(args.corpus.display().to_string()),
        source_sha256: Some(file_sha256(&args.corpus)?),
        recipe,
    };
    write_dataset(&args.out, &dataset, &manifest)?;
    let text = format!(
        "{} problems, {} classes: {}\nwrote {}\n",
        dataset.len(),
        dataset.n_classes(),
        manifest.catalog.join(", "),
        args.out.display()
    );
    emit(globals, &text, &serde_json::to_value(&manifest)?)
}

pub fn stats(globals: &Globals, args: StatsArgs) -> Result<()> {
    let (dataset, _) = read_dataset(&args.dataset)?;
    let s = dataset_stats(&dataset, &Tokenizer::default())?;
    let mut text = String::new();
    text.push_str(&format!("{:<20}{:>12}\n", "problems", s.size));
    text.push_str(&format!("{:<20}{:>12}\n", "vocabulary", s.vocab_size));
    text.push_str(&format!("{:<20}{:>12.1}\n", "avg words", s.avg_words));
    text.push_str(&format!("{:<20}{:>12}\n", "classes", s.n_classes));
    text.push_str(&format!(
        "{:<20}{:>12.3}\n",
        "label cardinality", s.label_cardinality
    ));
    text.push_str(&format!(
        "{:<20}{:>12.3}\n",
        "label density", s.label_density
    ));
    text.push_str(&format!("{:<20}{:>12}\n", "label subsets", s.label_subsets));
    text.push_str("\nclass histogram\n");
    for (tag, share) in &s.class_histogram {
        text.push_str(&format!("{tag:<28}{:>8.2}%\n", share * 100.0));
    }
    let value = json!({
        "size": s.size,
        "vocab_size": s.vocab_size,
        "avg_words": s.avg_words,
        "n_classes": s.n_classes,
        "label_cardinality": s.label_cardinality,
        "label_density": s.label_density,
        "label_subsets": s.label_subsets,
        "class_histogram": s.class_histogram,
    });
    emit(globals, &text, &value)
}

fn text_part(part: Part) -> TextPart {
    match part {
        Part::Full => TextPart::Full,
        Part::Statement => TextPart::StatementOnly,
        Part::Io => TextPart::IoAndConstraints,
    }
}

fn model_spec(args: &ModelArgs) -> ModelSpec {
    let mut spec = ModelSpec::new(args.model);
    if args.tfidf {
        spec.weighting = Weighting::Tfidf;
    }
    spec.min_count = args.min_count;
    spec.ngram_orders = args.ngrams.clone();
    spec.embeddings = args.embeddings.clone();
    if let Some(v) = args.alpha {
        spec.alpha = v;
    }
    if let Some(v) = args.reg {
        spec.svm.reg = v;
    }
    if let Some(v) = args.svm_epochs {
        spec.svm.epochs = v;
    }
    let n = &mut spec.neural;
    if let Some(v) = args.epochs {
        n.epochs = v;
    }
    if let Some(v) = args.batch_size {
        n.batch_size = v;
    }
    if let Some(v) = args.learning_rate {
        n.learning_rate = v;
    }
    if let Some(v) = args.embed_dim {
        n.embed_dim = v;
    }
    if let Some(v) = args.filters {
        n.filters_per_width = v;
    }
    if let Some(v) = &args.widths {
        n.widths = v.clone();
    }
    if let Some(v) = &args.hidden {
        n.hidden = v.clone();
    }
    if let Some(v) = args.dropout {
        n.dropout = v;
    }
    if let Some(v) = args.max_len {
        n.max_len = v;
    }
    if args.freeze_embeddings {
        n.trainable_embeddings = false;
    }
    if let Some(v) = args.members {
        spec.ensemble_members = v;
    }
    if let Some(s) = args.scheme {
        spec.ensemble_scheme = Some(s.into());
    }
    spec
}

/// Runs an experiment described by a fresh manifest and stores the manifest,
/// the raw output and a text report in `out`.
fn run_and_store(
    globals: &Globals,
    kind: ExperimentKind,
    args: &ModelArgs,
    spec: ModelSpec,
    out: &Path,
) -> Result<ExperimentOutput> {
    let manifest = ExperimentManifest::new(kind, &args.dataset, spec, args.folds, globals.seed)?;
    let output = run_manifest(&manifest)?;
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    store_output(out, &output)?;
    Ok(output)
}

fn run_manifest(manifest: &ExperimentManifest) -> Result<ExperimentOutput> {
    let (dataset, _) = read_dataset(&manifest.dataset)?;
    log::info!(
        "{} on {} problems, {} folds, seed {}",
        manifest.spec.label(),
        dataset.len(),
        manifest.folds,
        manifest.seed
    );
    Ok(manifest.run()?)
}

fn report_text(output: &ExperimentOutput) -> String {
    let mut text: String = output
        .reports()
        .iter()
        .map(|r| r.to_text() + "\n")
        .collect();
    if let ExperimentOutput::Ablation(a) = output {
        text.push_str(&a.categories_text());
    }
    text
}

fn store_output(out: &Path, output: &ExperimentOutput) -> Result<()> {
    write_json(&out.join(REPORT_JSON), output)?;
    write_atomic(&out.join(REPORT_TEXT), report_text(output).as_bytes())?;
    Ok(())
}

fn emit_output(globals: &Globals, output: &ExperimentOutput) -> Result<()> {
    emit(
        globals,
        &report_text(output),
        &serde_json::to_value(output)?,
    )
}

pub fn train(globals: &Globals, args: TrainArgs) -> Result<()> {
    let mut spec = model_spec(&args.model);
    spec.text_part = text_part(args.part);
    let (dataset, _) = read_dataset(&args.model.dataset)?;
    let stem = args
        .out
        .file_stem()
        .context("artifact path has no file name")?
        .to_string_lossy()
        .into_owned();
    let dir = args.out.parent().map(Path::to_path_buf).unwrap_or_default();

    let cv = if args.model.folds >= 2 {
        let manifest = ExperimentManifest::new(
            ExperimentKind::Cv,
            &args.model.dataset,
            spec.clone(),
            args.model.folds,
            globals.seed,
        )?;
        let output = run_manifest(&manifest)?;
        write_json(&dir.join(format!("{stem}.manifest.json")), &manifest)?;
        write_json(&dir.join(format!("{stem}.report.json")), &output)?;
        write_atomic(
            &dir.join(format!("{stem}.report.txt")),
            report_text(&output).as_bytes(),
        )?;
        Some(output)
    } else {
        None
    };

    log::info!("fitting {} on all {} problems", spec.label(), dataset.len());
    let problems = dataset.labeled_problems();
    let pretrained = load_pretrained(&spec, &problems)?;
    let model = train_model(&dataset, &spec, pretrained.as_ref(), globals.seed)?;
    save_model(&args.out, &model)?;

    let mut text = cv.as_ref().map(report_text).unwrap_or_default();
    text.push_str(&format!("wrote {}\n", args.out.display()));
    let value = json!({ "artifact": args.out, "cv": cv });
    emit(globals, &text, &value)
}

pub fn evaluate(globals: &Globals, args: EvaluateArgs) -> Result<()> {
    let (dataset, _) = read_dataset(&args.dataset)?;
    let model = load_model(&args.artifact)?;
    if model.kind() != dataset.kind {
        return Err(algotag::Error::param(
            "dataset",
            format!(
                "artifact predicts {:?} labels, dataset is {:?}",
                model.kind(),
                dataset.kind
            ),
        )
        .into());
    }
    // Both label spaces are mapped onto the model catalog extended with tags
    // only the dataset knows.
    let mut names: Vec<String> = model.catalog().to_vec();
    for tag in dataset.catalog.tags() {
        if !names.contains(tag) {
            log::warn!("tag {tag:?} is unknown to the model");
            names.push(tag.clone());
        }
    }
    let index = |tag: &str| names.iter().position(|n| n == tag).expect("tag was added");
    let truth: Vec<Vec<usize>> = dataset
        .items
        .iter()
        .map(|it| {
            let mut l: Vec<usize> = it
                .labels
                .iter()
                .map(|&l| index(dataset.catalog.name(l)))
                .collect();
            l.sort_unstable();
            l
        })
        .collect();
    let problems: Vec<&Problem> = dataset.items.iter().map(|it| &it.problem).collect();
    let pred = model.predict(&problems)?;
    let scores = Scores::compute(dataset.kind, &truth, &pred, names.len())?;
    let report = MetricsReport {
        label: format!("{} on {}", model.spec().label(), args.dataset.display()),
        kind: dataset.kind,
        folds: vec![FoldScores {
            fold: 0,
            n_items: dataset.len(),
            scores,
        }],
        mean: scores,
        pooled: scores,
    };
    emit(globals, &report.to_text(), &serde_json::to_value(&report)?)
}

pub fn ablate(globals: &Globals, args: AblateArgs) -> Result<()> {
    let part = text_part(args.part);
    let output = run_and_store(
        globals,
        ExperimentKind::Ablation { part },
        &args.model,
        model_spec(&args.model),
        &args.out,
    )?;
    if let ExperimentOutput::Ablation(run) = &output {
        if let Some(cm) = &run.confusion {
            let (dataset, _) = read_dataset(&args.model.dataset)?;
            let names = dataset.catalog.tags();
            write_atomic(
                &args.out.join("confusion.txt"),
                cm.to_text(names).as_bytes(),
            )?;
            let title = format!("confusion matrix, {part} text");
            write_atomic(
                &args.out.join("confusion.svg"),
                confusion_svg(&title, cm, names).as_bytes(),
            )?;
        }
    }
    emit_output(globals, &output)
}

pub fn curve(globals: &Globals, args: CurveArgs) -> Result<()> {
    let spec = model_spec(&args.model);
    let title = format!("learning curve, {}", spec.label());
    let output = run_and_store(
        globals,
        ExperimentKind::LearningCurve {
            fractions: args.fractions.clone(),
        },
        &args.model,
        spec,
        &args.out,
    )?;
    if let ExperimentOutput::LearningCurve { points } = &output {
        write_atomic(
            &args.out.join("curve.svg"),
            learning_curve_svg(points, &title).as_bytes(),
        )?;
    }
    emit_output(globals, &output)
}

pub fn baseline(globals: &Globals, args: BaselineArgs) -> Result<()> {
    let output = run_and_store(
        globals,
        ExperimentKind::RandomBaseline,
        &args.model,
        model_spec(&args.model),
        &args.out,
    )?;
    emit_output(globals, &output)
}

pub fn tune(globals: &Globals, args: TuneArgs) -> Result<()> {
    let (dataset, _) = read_dataset(&args.model.dataset)?;
    let spec = model_spec(&args.model);
    let (name, default_grid) = match spec.family {
        ModelFamily::Mnb => ("alpha", ALPHA_GRID.to_vec()),
        ModelFamily::Svm => ("reg", REG_GRID.to_vec()),
        other => {
            return Err(algotag::Error::param(
                "model",
                format!("tuning covers mnb and svm, not {other}"),
            )
            .into())
        }
    };
    let grid = args.grid.unwrap_or(default_grid);
    let (best, points) = grid_search(&dataset, &spec, &grid, args.model.folds, globals.seed)?;
    let mut text = format!("{:>10}{:>10}\n", name, "score");
    for p in &points {
        let mark = if p.value == best { " *" } else { "" };
        text.push_str(&format!(
            "{:>10}{:>10.4}{mark}\n",
            p.value,
            primary_score(&p.report)
        ));
    }
    text.push_str(&format!("best {name} = {best}\n"));
    let value = json!({
        "parameter": name,
        "best": best,
        "points": points
            .iter()
            .map(|p| json!({"value": p.value, "score": primary_score(&p.report), "report": p.report}))
            .collect::<Vec<_>>(),
    });
    emit(globals, &text, &value)
}

/// Problems from a JSON object or JSON lines; a missing tag list is read as
/// empty.
fn read_problems(path: &Path) -> Result<Vec<Problem>> {
    let content = std::fs::read_to_string(path).map_err(|e| algotag::Error::io(path, e))?;
    let records: Vec<(usize, Value)> = match serde_json::from_str::<Value>(&content) {
        Ok(v @ Value::Object(_)) => vec![(1, v)],
        _ => content
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l)
                    .map(|v| (i + 1, v))
                    .map_err(|e| algotag::Error::Malformed {
                        line: i + 1,
                        message: e.to_string(),
                    })
            })
            .collect::<Result<_, _>>()?,
    };
    let mut problems = Vec::with_capacity(records.len());
    for (line, mut value) in records {
        if let Value::Object(obj) = &mut value {
            obj.entry("tags").or_insert_with(|| json!([]));
        }
        let problem = parse_record(&value.to_string(), line)?;
        problem.validate()?;
        problems.push(problem);
    }
    if problems.is_empty() {
        return Err(algotag::Error::Empty("problem file").into());
    }
    Ok(problems)
}

pub fn predict(globals: &Globals, args: PredictArgs) -> Result<()> {
    let model = load_model(&args.artifact)?;
    let problems = read_problems(&args.problem)?;
    let refs: Vec<&Problem> = problems.iter().collect();
    let preds = model.predict(&refs)?;
    let catalog = model.catalog();
    let mut text = String::new();
    let mut rows = Vec::new();
    for (p, labels) in problems.iter().zip(&preds) {
        let tags: Vec<&str> = labels.iter().map(|&l| catalog[l].as_str()).collect();
        text.push_str(&format!("{}\t{}\n", p.id, tags.join(", ")));
        rows.push(json!({ "id": p.id, "tags": tags }));
    }
    emit(globals, &text, &Value::Array(rows))
}

fn stored_report_path(manifest: &Path) -> PathBuf {
    let name = manifest
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    match name.strip_suffix(".manifest.json") {
        Some(stem) => manifest.with_file_name(format!("{stem}.report.json")),
        None => manifest.with_file_name(REPORT_JSON),
    }
}

pub fn rerun(globals: &Globals, args: RerunArgs) -> Result<()> {
    let manifest = ExperimentManifest::read(&args.manifest)?;
    let output = run_manifest(&manifest)?;
    if let Some(out) = &args.out {
        write_json(&out.join(MANIFEST_FILE), &manifest)?;
        store_output(out, &output)?;
    }
    let stored_path = stored_report_path(&args.manifest);
    let matches = match std::fs::read_to_string(&stored_path) {
        Ok(text) => {
            let stored: ExperimentOutput =
                serde_json::from_str(&text).map_err(|e| algotag::Error::Malformed {
                    line: e.line(),
                    message: format!("{}: {e}", stored_path.display()),
                })?;
            Some(stored == output)
        }
        Err(_) => None,
    };
    emit_output(globals, &output)?;
    match matches {
        Some(true) => {
            eprintln!("rerun matches {}", stored_path.display());
            Ok(())
        }
        Some(false) => bail!("rerun differs from {}", stored_path.display()),
        None => {
            log::warn!(
                "no stored report at {}; nothing to compare",
                stored_path.display()
            );
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_next_to_manifest() {
        assert_eq!(
            stored_report_path(Path::new("runs/a/manifest.json")),
            PathBuf::from("runs/a/report.json")
        );
        assert_eq!(
            stored_report_path(Path::new("models/svm.manifest.json")),
            PathBuf::from("models/svm.report.json")
        );
    }

    #[test]
    fn part_names() {
        assert_eq!(text_part(Part::Io), TextPart::IoAndConstraints);
        assert_eq!(TextPart::default(), text_part(Part::Full));
    }
}
