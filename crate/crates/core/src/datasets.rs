//! Dataset builders: raw filtering, top-k multilabel restriction, single-tag
//! multiclass extraction, balanced sampling, statistics, folds, label
//! shuffling and nested training-fraction subsets.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{self, Problem};
use crate::error::{Error, Result};
use crate::features::Tokenizer;
use crate::seeded_rng;

/// Tags dropped by [`filter_raw`] unless configured otherwise.
pub const DEFAULT_NON_ALGORITHMIC: [&str; 2] = ["*special", "*special problem"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Multiclass,
    Multilabel,
}

/// Ordered tag list: descending frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct TagCatalog {
    tags: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for TagCatalog {
    fn from(tags: Vec<String>) -> Self {
        let index = tags
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        TagCatalog { tags, index }
    }
}

impl From<TagCatalog> for Vec<String> {
    fn from(c: TagCatalog) -> Self {
        c.tags
    }
}

impl TagCatalog {
    pub fn new(tags: Vec<String>) -> Result<Self> {
        let unique: HashSet<&String> = tags.iter().collect();
        if unique.len() != tags.len() {
            return Err(Error::param("catalog", "duplicate tag"));
        }
        Ok(tags.into())
    }

    /// Orders tags by descending count, then lexicographically.
    pub fn by_frequency(counts: &BTreeMap<String, usize>) -> Self {
        let mut tags: Vec<(&String, usize)> = counts.iter().map(|(t, &c)| (t, c)).collect();
        tags.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        tags.into_iter()
            .map(|(t, _)| t.clone())
            .collect::<Vec<_>>()
            .into()
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn index_of(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.tags[idx]
    }

    pub fn truncated(&self, k: usize) -> Self {
        self.tags[..k.min(self.tags.len())].to_vec().into()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledItem {
    pub problem: Problem,
    /// Sorted catalog indices.
    pub labels: Vec<usize>,
}

impl LabeledItem {
    pub fn id(&self) -> &str {
        &self.problem.id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub kind: DatasetKind,
    pub catalog: TagCatalog,
    pub items: Vec<LabeledItem>,
}

impl LabeledDataset {
    /// Builds a dataset from problems whose tags are all catalog members.
    pub fn from_problems(
        kind: DatasetKind,
        catalog: TagCatalog,
        problems: Vec<Problem>,
    ) -> Result<Self> {
        let items = problems
            .into_iter()
            .map(|problem| {
                let labels = problem
                    .tags
                    .iter()
                    .map(|t| {
                        catalog.index_of(t).ok_or_else(|| Error::InvalidProblem {
                            id: problem.id.clone(),
                            message: format!("tag {t:?} is not in the catalog"),
                        })
                    })
                    .collect::<Result<BTreeSet<_>>>()?
                    .into_iter()
                    .collect();
                Ok(LabeledItem { problem, labels })
            })
            .collect::<Result<Vec<_>>>()?;
        let ds = LabeledDataset {
            kind,
            catalog,
            items,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for item in &self.items {
            let bad = |message: &str| Error::InvalidProblem {
                id: item.id().to_string(),
                message: message.to_string(),
            };
            if !seen.insert(item.id()) {
                return Err(Error::DuplicateId(item.id().to_string()));
            }
            if item.labels.is_empty() {
                return Err(bad("empty label set"));
            }
            if self.kind == DatasetKind::Multiclass && item.labels.len() != 1 {
                return Err(bad("multiclass item must carry exactly one label"));
            }
            if item.labels.iter().any(|&l| l >= self.catalog.len()) {
                return Err(bad("label outside the catalog"));
            }
            if item.labels.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad("labels must be sorted and unique"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.catalog.len()
    }

    pub fn label_sets(&self) -> Vec<Vec<usize>> {
        self.items.iter().map(|i| i.labels.clone()).collect()
    }

    /// Single class per item; only meaningful for multiclass datasets.
    pub fn classes(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.labels[0]).collect()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.items.iter().map(|i| i.id()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            kind: self.kind,
            catalog: self.catalog.clone(),
            items: indices.iter().map(|&i| self.items[i].clone()).collect(),
        }
    }

    /// Problems with their tags rewritten to the dataset's label names.
    pub fn labeled_problems(&self) -> Vec<Problem> {
        self.items
            .iter()
            .map(|item| Problem {
                tags: item
                    .labels
                    .iter()
                    .map(|&l| self.catalog.name(l).to_string())
                    .collect(),
                ..item.problem.clone()
            })
            .collect()
    }

    /// Per-tag share of items carrying the tag, in catalog order.
    pub fn class_histogram(&self) -> Vec<(String, f64)> {
        let mut counts = vec![0usize; self.catalog.len()];
        for item in &self.items {
            for &l in &item.labels {
                counts[l] += 1;
            }
        }
        let n = self.items.len().max(1) as f64;
        counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (self.catalog.name(i).to_string(), c as f64 / n))
            .collect()
    }
}

fn tag_counts<'a>(
    tag_sets: impl IntoIterator<Item = &'a BTreeSet<String>>,
) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for tags in tag_sets {
        for t in tags {
            *counts.entry(t.clone()).or_insert(0) += 1;
        }
    }
    counts
}

/// Drops non-algorithmic tags, then problems left without tags and problems
/// whose text was not extracted completely.
pub fn filter_raw(problems: &[Problem], non_algorithmic: &BTreeSet<String>) -> Vec<Problem> {
    problems
        .iter()
        .filter_map(|p| {
            let tags: BTreeSet<String> = p
                .tags
                .iter()
                .filter(|t| !non_algorithmic.contains(*t))
                .cloned()
                .collect();
            if tags.is_empty() || p.validate().is_err() {
                return None;
            }
            Some(Problem { tags, ..p.clone() })
        })
        .collect()
}

pub fn default_non_algorithmic() -> BTreeSet<String> {
    DEFAULT_NON_ALGORITHMIC
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn check_k(k: usize, distinct: usize) -> Result<()> {
    if k == 0 || k > distinct {
        return Err(Error::param(
            "top_k",
            format!("must be in 1..={distinct}, got {k}"),
        ));
    }
    Ok(())
}

/// Keeps the `k` most frequent tags, intersects every problem's tags with
/// them and drops problems left empty.
pub fn build_multilabel(problems: &[Problem], k: usize) -> Result<LabeledDataset> {
    let counts = tag_counts(problems.iter().map(|p| &p.tags));
    check_k(k, counts.len())?;
    let catalog = TagCatalog::by_frequency(&counts).truncated(k);
    let items = problems
        .iter()
        .filter_map(|p| {
            let labels: Vec<usize> = p
                .tags
                .iter()
                .filter_map(|t| catalog.index_of(t))
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            (!labels.is_empty()).then(|| LabeledItem {
                problem: p.clone(),
                labels,
            })
        })
        .collect();
    Ok(LabeledDataset {
        kind: DatasetKind::Multilabel,
        catalog,
        items,
    })
}

/// Single-tag items of a multilabel dataset whose tag is among the `k` most
/// frequent tags of that single-tag pool.
pub fn build_multiclass(source: &LabeledDataset, k: usize) -> Result<LabeledDataset> {
    if source.kind != DatasetKind::Multilabel {
        return Err(Error::param(
            "source",
            "multiclass datasets are built from a multilabel dataset",
        ));
    }
    let pool: Vec<&LabeledItem> = source
        .items
        .iter()
        .filter(|i| i.labels.len() == 1)
        .collect();
    let mut counts = BTreeMap::new();
    for item in &pool {
        *counts
            .entry(source.catalog.name(item.labels[0]).to_string())
            .or_insert(0) += 1;
    }
    check_k(k, counts.len())?;
    let catalog = TagCatalog::by_frequency(&counts).truncated(k);
    let items = pool
        .into_iter()
        .filter_map(|item| {
            let idx = catalog.index_of(source.catalog.name(item.labels[0]))?;
            Some(LabeledItem {
                problem: item.problem.clone(),
                labels: vec![idx],
            })
        })
        .collect();
    Ok(LabeledDataset {
        kind: DatasetKind::Multiclass,
        catalog,
        items,
    })
}

/// `per_class` items, sampled without replacement, from each of the `k` most
/// frequent classes of a multiclass dataset. Items keep their source order.
pub fn build_balanced(
    dataset: &LabeledDataset,
    k: usize,
    per_class: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    if dataset.kind != DatasetKind::Multiclass {
        return Err(Error::param(
            "dataset",
            "balanced datasets are sampled from a multiclass dataset",
        ));
    }
    let mut counts = BTreeMap::new();
    for item in &dataset.items {
        *counts
            .entry(dataset.catalog.name(item.labels[0]).to_string())
            .or_insert(0) += 1;
    }
    check_k(k, counts.len())?;
    if per_class == 0 {
        return Err(Error::param("per_class", "must be positive"));
    }
    let catalog = TagCatalog::by_frequency(&counts).truncated(k);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, item) in dataset.items.iter().enumerate() {
        if let Some(c) = catalog.index_of(dataset.catalog.name(item.labels[0])) {
            by_class[c].push(i);
        }
    }
    let mut rng = seeded_rng(seed);
    let mut chosen = Vec::with_capacity(k * per_class);
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.len() < per_class {
            return Err(Error::InsufficientClass {
                class: catalog.name(c).to_string(),
                available: members.len(),
                required: per_class,
            });
        }
        members.shuffle(&mut rng);
        chosen.extend(members.iter().take(per_class).map(|&i| (i, c)));
    }
    chosen.sort_unstable();
    let items = chosen
        .into_iter()
        .map(|(i, c)| LabeledItem {
            problem: dataset.items[i].problem.clone(),
            labels: vec![c],
        })
        .collect();
    Ok(LabeledDataset {
        kind: DatasetKind::Multiclass,
        catalog,
        items,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub size: usize,
    pub vocab_size: usize,
    pub n_classes: usize,
    pub avg_words: f64,
    pub label_cardinality: f64,
    pub label_density: f64,
    pub label_subsets: usize,
    pub class_histogram: Vec<(String, f64)>,
}

/// Size, vocabulary and label statistics computed over full problem texts.
pub fn dataset_stats(dataset: &LabeledDataset, tokenizer: &Tokenizer) -> Result<DatasetStats> {
    if dataset.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut vocab = HashSet::new();
    let mut words = 0usize;
    for item in &dataset.items {
        let tokens = tokenizer.tokenize(&item.problem.full_text()?.text);
        words += tokens.len();
        vocab.extend(tokens);
    }
    let n = dataset.len() as f64;
    let total_labels: usize = dataset.items.iter().map(|i| i.labels.len()).sum();
    let label_cardinality = total_labels as f64 / n;
    let subsets: HashSet<&Vec<usize>> = dataset.items.iter().map(|i| &i.labels).collect();
    Ok(DatasetStats {
        size: dataset.len(),
        vocab_size: vocab.len(),
        n_classes: dataset.n_classes(),
        avg_words: words as f64 / n,
        label_cardinality,
        label_density: label_cardinality / dataset.n_classes() as f64,
        label_subsets: subsets.len(),
        class_histogram: dataset.class_histogram(),
    })
}

/// Assignment of every item to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub ids: Vec<String>,
    /// Fold index of `ids[i]`, aligned with the dataset's item order.
    pub folds: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|i| i == id).map(|p| self.folds[p])
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len())
            .filter(|&i| self.folds[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len())
            .filter(|&i| self.folds[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded k-fold partition; multiclass datasets are stratified by class.
pub fn kfold_split(dataset: &LabeledDataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::param("folds", format!("need at least 2, got {k}")));
    }
    if k > dataset.len() {
        return Err(Error::param(
            "folds",
            format!("{k} folds exceed dataset size {}", dataset.len()),
        ));
    }
    let mut rng = seeded_rng(seed);
    let groups: Vec<Vec<usize>> = match dataset.kind {
        DatasetKind::Multiclass => {
            let mut groups = vec![Vec::new(); dataset.n_classes()];
            for (i, item) in dataset.items.iter().enumerate() {
                groups[item.labels[0]].push(i);
            }
            groups
        }
        DatasetKind::Multilabel => vec![(0..dataset.len()).collect()],
    };
    let mut folds = vec![0; dataset.len()];
    let mut cursor = 0usize;
    for mut group in groups {
        group.shuffle(&mut rng);
        for i in group {
            folds[i] = cursor % k;
            cursor += 1;
        }
    }
    Ok(FoldPlan {
        k,
        ids: dataset.items.iter().map(|i| i.id().to_string()).collect(),
        folds,
    })
}

/// Reassigns label sets to items by a seeded permutation.
pub fn shuffle_labels(dataset: &LabeledDataset, seed: u64) -> LabeledDataset {
    let mut labels = dataset.label_sets();
    labels.shuffle(&mut seeded_rng(seed));
    LabeledDataset {
        kind: dataset.kind,
        catalog: dataset.catalog.clone(),
        items: dataset
            .items
            .iter()
            .zip(labels)
            .map(|(item, labels)| LabeledItem {
                problem: item.problem.clone(),
                labels,
            })
            .collect(),
    }
}

/// The first `round(n · percent / 100)` items of one seeded permutation, in
/// source order. Subsets drawn with the same seed nest.
pub fn subsample_fraction(
    dataset: &LabeledDataset,
    percent: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(Error::param(
            "percent",
            format!("must be in (0, 100], got {percent}"),
        ));
    }
    if percent == 100.0 {
        return Ok(dataset.clone());
    }
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut seeded_rng(seed));
    let keep = (dataset.len() as f64 * percent / 100.0).round() as usize;
    let mut chosen = order[..keep].to_vec();
    chosen.sort_unstable();
    Ok(dataset.subset(&chosen))
}

/// One step of a dataset recipe, replayable from the raw dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum RecipeStep {
    FilterRaw {
        non_algorithmic: Vec<String>,
    },
    Multilabel {
        top_k: usize,
    },
    Multiclass {
        top_k: usize,
    },
    Balanced {
        top_k: usize,
        per_class: usize,
        seed: u64,
    },
    ShuffleLabels {
        seed: u64,
    },
    Subsample {
        percent: f64,
        seed: u64,
    },
}

/// Sidecar manifest stored next to a dataset's problem file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub kind: DatasetKind,
    pub catalog: Vec<String>,
    pub size: usize,
    /// Raw corpus the recipe starts from, with its SHA-256.
    pub source: Option<String>,
    pub source_sha256: Option<String>,
    pub recipe: Vec<RecipeStep>,
}

pub const DATASET_FORMAT_VERSION: u32 = 1;
pub const PROBLEMS_FILE: &str = "problems.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Applies a recipe to raw problems.
pub fn replay_recipe(raw: &[Problem], recipe: &[RecipeStep]) -> Result<LabeledDataset> {
    let mut problems = raw.to_vec();
    let mut dataset: Option<LabeledDataset> = None;
    for step in recipe {
        let current = dataset.take();
        dataset = Some(match (step, current) {
            (RecipeStep::FilterRaw { non_algorithmic }, None) => {
                let set = non_algorithmic.iter().cloned().collect();
                problems = filter_raw(&problems, &set);
                continue;
            }
            (RecipeStep::Multilabel { top_k }, None) => build_multilabel(&problems, *top_k)?,
            (RecipeStep::Multiclass { top_k }, Some(ds)) => build_multiclass(&ds, *top_k)?,
            (
                RecipeStep::Balanced {
                    top_k,
                    per_class,
                    seed,
                },
                Some(ds),
            ) => build_balanced(&ds, *top_k, *per_class, *seed)?,
            (RecipeStep::ShuffleLabels { seed }, Some(ds)) => shuffle_labels(&ds, *seed),
            (RecipeStep::Subsample { percent, seed }, Some(ds)) => {
                subsample_fraction(&ds, *percent, *seed)?
            }
            (step, _) => {
                return Err(Error::param(
                    "recipe",
                    format!("step {step:?} is out of order"),
                ));
            }
        });
    }
    dataset.ok_or_else(|| Error::param("recipe", "recipe does not build a dataset"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn write_dataset(
    dir: impl AsRef<Path>,
    dataset: &LabeledDataset,
    manifest: &DatasetManifest,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    corpus::write_corpus(dir.join(PROBLEMS_FILE), &dataset.labeled_problems())?;
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    corpus::write_atomic(&dir.join(MANIFEST_FILE), format!("{json}\n").as_bytes())
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = dir.as_ref().join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Malformed {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}

pub fn read_dataset(dir: impl AsRef<Path>) -> Result<(LabeledDataset, DatasetManifest)> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let problems = corpus::parse_corpus(dir.join(PROBLEMS_FILE))?;
    let catalog = TagCatalog::new(manifest.catalog.clone())?;
    let dataset = LabeledDataset::from_problems(manifest.kind, catalog, problems)?;
    Ok((dataset, manifest))
}
