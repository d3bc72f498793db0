//! Multiclass and multilabel evaluation metrics, confusion matrices and
//! category-restricted scoring.
//!
//! All scores are fractions in `[0, 1]`. Per-class F1 is 0 for a class with
//! neither support nor predictions.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::datasets::DatasetKind;
use crate::error::{Error, Result};

/// Tags whose names describe the kind of problem.
pub const PROBLEM_CATEGORY: [&str; 9] = [
    "probabilities",
    "geometry",
    "combinatorics",
    "number theory",
    "strings",
    "trees",
    "graphs",
    "math",
    "data structures",
];

/// Tags whose names describe the solving technique.
pub const SOLUTION_CATEGORY: [&str; 11] = [
    "dsu",
    "binary search",
    "dfs and similar",
    "constructive algorithms",
    "brute force",
    "greedy",
    "dp",
    "bitmask",
    "two pointers",
    "sortings",
    "implementation",
];

/// Human micro/macro F1 on a 100-problem CFML20 subset, for report footers.
pub const HUMAN_REFERENCE_F1_MICRO: f64 = 0.518;
pub const HUMAN_REFERENCE_F1_MACRO: f64 = 0.427;

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{a} true labels vs {b} predictions")));
    }
    Ok(())
}

pub fn accuracy(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths(truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::Empty("prediction list"));
    }
    let correct = truth.iter().zip(pred).filter(|(t, p)| t == p).count();
    Ok(correct as f64 / truth.len() as f64)
}

/// Per-class (tp, fp, fn) counts for single-label predictions.
fn class_counts(truth: &[usize], pred: &[usize], n_classes: usize) -> Vec<(usize, usize, usize)> {
    let mut counts = vec![(0, 0, 0); n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if t == p {
            counts[t].0 += 1;
        } else {
            counts[p].1 += 1;
            counts[t].2 += 1;
        }
    }
    counts
}

/// Macro F1 over `n_classes`; with `weighted` each class is weighted by its
/// true support instead.
pub fn f1_macro(truth: &[usize], pred: &[usize], n_classes: usize, weighted: bool) -> Result<f64> {
    check_lengths(truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::Empty("prediction list"));
    }
    if let Some(&bad) = truth.iter().chain(pred).find(|&&c| c >= n_classes) {
        return Err(Error::Shape(format!(
            "class {bad} outside {n_classes} classes"
        )));
    }
    let counts = class_counts(truth, pred, n_classes);
    let scores: Vec<f64> = counts
        .iter()
        .map(|&(tp, fp, fn_)| f1(tp, fp, fn_))
        .collect();
    let supports: Vec<usize> = counts.iter().map(|&(tp, _, fn_)| tp + fn_).collect();
    Ok(average_f1(&scores, &supports, weighted))
}

/// Uniform or support-weighted mean of per-class F1 scores.
pub fn average_f1(scores: &[f64], supports: &[usize], weighted: bool) -> f64 {
    if weighted {
        let total: usize = supports.iter().sum();
        scores
            .iter()
            .zip(supports)
            .map(|(s, &n)| s * n as f64 / total as f64)
            .sum()
    } else {
        scores.iter().sum::<f64>() / scores.len() as f64
    }
}

/// Micro F1 of single-label predictions (identical to accuracy).
pub fn f1_micro_multiclass(truth: &[usize], pred: &[usize]) -> Result<f64> {
    check_lengths(truth.len(), pred.len())?;
    if truth.is_empty() {
        return Err(Error::Empty("prediction list"));
    }
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (t, p) in truth.iter().zip(pred) {
        if t == p {
            tp += 1;
        } else {
            fp += 1;
            fn_ += 1;
        }
    }
    Ok(f1(tp, fp, fn_))
}

fn label_counts(
    truth: &[Vec<usize>],
    pred: &[Vec<usize>],
    n_labels: usize,
) -> Vec<(usize, usize, usize)> {
    let mut counts = vec![(0, 0, 0); n_labels];
    for (t, p) in truth.iter().zip(pred) {
        let t: BTreeSet<usize> = t.iter().copied().collect();
        let p: BTreeSet<usize> = p.iter().copied().collect();
        for &l in t.intersection(&p) {
            counts[l].0 += 1;
        }
        for &l in p.difference(&t) {
            counts[l].1 += 1;
        }
        for &l in t.difference(&p) {
            counts[l].2 += 1;
        }
    }
    counts
}

fn check_sets(truth: &[Vec<usize>], pred: &[Vec<usize>], n_labels: usize) -> Result<()> {
    check_lengths(truth.len(), pred.len())?;
    if let Some(&bad) = truth.iter().chain(pred).flatten().find(|&&l| l >= n_labels) {
        return Err(Error::Shape(format!(
            "label {bad} outside {n_labels} labels"
        )));
    }
    Ok(())
}

/// F1 of TP/FP/FN pooled over all labels; 0 when nothing is true or predicted.
pub fn f1_micro_multilabel(
    truth: &[Vec<usize>],
    pred: &[Vec<usize>],
    n_labels: usize,
) -> Result<f64> {
    check_sets(truth, pred, n_labels)?;
    let (tp, fp, fn_) = label_counts(truth, pred, n_labels)
        .into_iter()
        .fold((0, 0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1, acc.2 + c.2));
    Ok(f1(tp, fp, fn_))
}

/// Per-label F1 averaged uniformly over the catalog.
pub fn f1_macro_multilabel(
    truth: &[Vec<usize>],
    pred: &[Vec<usize>],
    n_labels: usize,
) -> Result<f64> {
    check_sets(truth, pred, n_labels)?;
    if n_labels == 0 {
        return Err(Error::Empty("label catalog"));
    }
    let counts = label_counts(truth, pred, n_labels);
    Ok(counts
        .iter()
        .map(|&(tp, fp, fn_)| f1(tp, fp, fn_))
        .sum::<f64>()
        / n_labels as f64)
}

/// Σ |true △ pred| / (N · L).
pub fn hamming_loss(truth: &[Vec<usize>], pred: &[Vec<usize>], n_labels: usize) -> Result<f64> {
    check_sets(truth, pred, n_labels)?;
    if truth.is_empty() {
        return Err(Error::Empty("prediction list"));
    }
    let wrong: usize = label_counts(truth, pred, n_labels)
        .iter()
        .map(|c| c.1 + c.2)
        .sum();
    Ok(wrong as f64 / (truth.len() * n_labels) as f64)
}

/// Counts with rows indexed by true class and columns by predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub n_classes: usize,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..self.n_classes).map(|i| self.counts[i][i]).sum()
    }

    /// Rows scaled to sum to one; empty rows stay zero.
    pub fn row_normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let s: usize = row.iter().sum();
                row.iter()
                    .map(|&c| if s == 0 { 0.0 } else { c as f64 / s as f64 })
                    .collect()
            })
            .collect()
    }

    /// Tab-separated matrix with a header row of class names.
    pub fn to_text(&self, names: &[String]) -> String {
        let mut out = String::from("true\\pred");
        for n in names {
            out.push('\t');
            out.push_str(n);
        }
        out.push('\n');
        for (i, row) in self.counts.iter().enumerate() {
            out.push_str(&names[i]);
            for c in row {
                out.push_str(&format!("\t{c}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix(
    truth: &[usize],
    pred: &[usize],
    n_classes: usize,
) -> Result<ConfusionMatrix> {
    check_lengths(truth.len(), pred.len())?;
    let mut counts = vec![vec![0; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Shape(format!("class outside {n_classes} classes")));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { n_classes, counts })
}

/// Micro and macro F1 restricted to a subset of the catalog.
///
/// Every label set is intersected with the category and items whose
/// restricted true set is empty are dropped. Returns `None` when no item
/// remains. Macro F1 averages over the category's labels.
pub fn category_scores(
    truth: &[Vec<usize>],
    pred: &[Vec<usize>],
    category: &BTreeSet<usize>,
    n_labels: usize,
) -> Result<Option<(f64, f64)>> {
    if category.is_empty() {
        return Err(Error::Empty("category"));
    }
    check_sets(truth, pred, n_labels)?;
    if let Some(&bad) = category.iter().find(|&&l| l >= n_labels) {
        return Err(Error::Shape(format!(
            "category label {bad} outside catalog"
        )));
    }
    // Relabel category members densely so macro F1 averages over them only.
    let dense: Vec<usize> = category.iter().copied().collect();
    let remap = |set: &Vec<usize>| -> Vec<usize> {
        set.iter()
            .filter_map(|l| dense.iter().position(|d| d == l))
            .collect()
    };
    let mut t_kept = Vec::new();
    let mut p_kept = Vec::new();
    for (t, p) in truth.iter().zip(pred) {
        let t = remap(t);
        if t.is_empty() {
            continue;
        }
        t_kept.push(t);
        p_kept.push(remap(p));
    }
    if t_kept.is_empty() {
        return Ok(None);
    }
    Ok(Some((
        f1_micro_multilabel(&t_kept, &p_kept, dense.len())?,
        f1_macro_multilabel(&t_kept, &p_kept, dense.len())?,
    )))
}

/// Catalog indices of the tags named in `names`.
pub fn category_indices(catalog: &[String], names: &[&str]) -> BTreeSet<usize> {
    catalog
        .iter()
        .enumerate()
        .filter(|(_, t)| names.contains(&t.as_str()))
        .map(|(i, _)| i)
        .collect()
}

/// Scores of one evaluation unit (a fold, or pooled predictions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scores {
    Multiclass {
        accuracy: f64,
        f1_macro: f64,
        f1_weighted: f64,
    },
    Multilabel {
        hamming_loss: f64,
        f1_micro: f64,
        f1_macro: f64,
    },
}

impl Scores {
    /// Scores label sets; multiclass sets must be singletons.
    pub fn compute(
        kind: DatasetKind,
        truth: &[Vec<usize>],
        pred: &[Vec<usize>],
        n_labels: usize,
    ) -> Result<Self> {
        match kind {
            DatasetKind::Multiclass => {
                let single = |sets: &[Vec<usize>]| -> Result<Vec<usize>> {
                    sets.iter()
                        .map(|s| match s.as_slice() {
                            [c] => Ok(*c),
                            _ => Err(Error::Shape(
                                "multiclass prediction must be a single class".into(),
                            )),
                        })
                        .collect()
                };
                let t = single(truth)?;
                let p = single(pred)?;
                Ok(Scores::Multiclass {
                    accuracy: accuracy(&t, &p)?,
                    f1_macro: f1_macro(&t, &p, n_labels, false)?,
                    f1_weighted: f1_macro(&t, &p, n_labels, true)?,
                })
            }
            DatasetKind::Multilabel => Ok(Scores::Multilabel {
                hamming_loss: hamming_loss(truth, pred, n_labels)?,
                f1_micro: f1_micro_multilabel(truth, pred, n_labels)?,
                f1_macro: f1_macro_multilabel(truth, pred, n_labels)?,
            }),
        }
    }

    /// Named values in a fixed order.
    pub fn values(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Scores::Multiclass {
                accuracy,
                f1_macro,
                f1_weighted,
            } => vec![
                ("accuracy", accuracy),
                ("f1_macro", f1_macro),
                ("f1_weighted", f1_weighted),
            ],
            Scores::Multilabel {
                hamming_loss,
                f1_micro,
                f1_macro,
            } => vec![
                ("hamming_loss", hamming_loss),
                ("f1_micro", f1_micro),
                ("f1_macro", f1_macro),
            ],
        }
    }

    /// Unweighted mean of each value across units of the same kind.
    pub fn mean(all: &[Scores]) -> Result<Scores> {
        let first = all.first().ok_or(Error::Empty("fold scores"))?;
        let n = all.len() as f64;
        let mut sums = vec![0.0; 3];
        for s in all {
            if std::mem::discriminant(s) != std::mem::discriminant(first) {
                return Err(Error::Shape("mixed score kinds".into()));
            }
            for (acc, (_, v)) in sums.iter_mut().zip(s.values()) {
                *acc += v;
            }
        }
        Ok(match first {
            Scores::Multiclass { .. } => Scores::Multiclass {
                accuracy: sums[0] / n,
                f1_macro: sums[1] / n,
                f1_weighted: sums[2] / n,
            },
            Scores::Multilabel { .. } => Scores::Multilabel {
                hamming_loss: sums[0] / n,
                f1_micro: sums[1] / n,
                f1_macro: sums[2] / n,
            },
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values()
            .into_iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldScores {
    pub fold: usize,
    pub n_items: usize,
    pub scores: Scores,
}

/// Per-fold scores plus their mean and the scores of the pooled out-of-fold
/// predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub kind: DatasetKind,
    pub folds: Vec<FoldScores>,
    pub mean: Scores,
    pub pooled: Scores,
}

impl MetricsReport {
    pub fn to_text(&self) -> String {
        let mut out = format!("{} ({} folds)\n", self.label, self.folds.len());
        let names: Vec<&str> = self.mean.values().iter().map(|(k, _)| *k).collect();
        out.push_str(&format!("{:<8}{:>8}", "fold", "items"));
        for n in &names {
            out.push_str(&format!("{n:>14}"));
        }
        out.push('\n');
        let fmt = |name: &str, v: f64| {
            if name == "hamming_loss" {
                format!("{v:>14.4}")
            } else {
                format!("{:>14.2}", v * 100.0)
            }
        };
        for f in &self.folds {
            out.push_str(&format!("{:<8}{:>8}", f.fold, f.n_items));
            for (n, v) in f.scores.values() {
                out.push_str(&fmt(n, v));
            }
            out.push('\n');
        }
        for (label, s) in [("mean", &self.mean), ("pooled", &self.pooled)] {
            let items: usize = self.folds.iter().map(|f| f.n_items).sum();
            out.push_str(&format!("{label:<8}{items:>8}"));
            for (n, v) in s.values() {
                out.push_str(&fmt(n, v));
            }
            out.push('\n');
        }
        out
    }
}
