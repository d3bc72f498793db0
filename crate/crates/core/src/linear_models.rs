//! Multinomial naive Bayes and linear SVMs over sparse bag-of-words vectors,
//! in multiclass and one-vs-rest multilabel form.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::decode::{argmax, threshold_decode};
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::seeded_rng;

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const ALPHA_GRID: [f64; 3] = [0.1, 0.5, 1.0];
pub const DEFAULT_REG: f64 = 1e-4;
pub const REG_GRID: [f64; 5] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];

fn check_features(v: &SparseVector, n_features: usize) -> Result<()> {
    if v.dim_bound() > n_features {
        return Err(Error::Shape(format!(
            "feature id {} outside a {n_features}-feature model",
            v.dim_bound() - 1
        )));
    }
    Ok(())
}

/// Multinomial naive Bayes with additive smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub alpha: f64,
    pub n_features: usize,
    pub log_priors: Vec<f64>,
    /// `log_likelihoods[c][t] = ln P(t | c)`.
    pub log_likelihoods: Vec<Vec<f64>>,
}

/// Fits class priors and smoothed per-class feature likelihoods:
/// P(t|c) = (count(c,t) + α) / (Σ_t count(c,t) + α·V).
pub fn train_mnb(
    vectors: &[SparseVector],
    labels: &[usize],
    n_classes: usize,
    n_features: usize,
    alpha: f64,
) -> Result<NaiveBayesModel> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param(
            "alpha",
            format!("must be positive, got {alpha}"),
        ));
    }
    if vectors.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} vectors vs {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    let mut class_docs = vec![0usize; n_classes];
    let mut counts = vec![vec![0.0; n_features]; n_classes];
    for (v, &c) in vectors.iter().zip(labels) {
        if c >= n_classes {
            return Err(Error::Shape(format!(
                "class {c} outside {n_classes} classes"
            )));
        }
        check_features(v, n_features)?;
        class_docs[c] += 1;
        for (i, x) in v.iter() {
            counts[c][i as usize] += x;
        }
    }
    if let Some(empty) = class_docs.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(format!("class {empty}")));
    }
    let n = vectors.len() as f64;
    let log_priors = class_docs.iter().map(|&d| (d as f64 / n).ln()).collect();
    let log_likelihoods = counts
        .into_iter()
        .map(|row| {
            let total: f64 = row.iter().sum::<f64>() + alpha * n_features as f64;
            row.into_iter()
                .map(|c| ((c + alpha) / total).ln())
                .collect()
        })
        .collect();
    Ok(NaiveBayesModel {
        alpha,
        n_features,
        log_priors,
        log_likelihoods,
    })
}

impl NaiveBayesModel {
    pub fn n_classes(&self) -> usize {
        self.log_priors.len()
    }

    /// Unnormalized log posteriors: ln P(c) + Σ_t x_t ln P(t|c).
    pub fn scores(&self, v: &SparseVector) -> Result<Vec<f64>> {
        check_features(v, self.n_features)?;
        Ok(self
            .log_priors
            .iter()
            .zip(&self.log_likelihoods)
            .map(|(prior, ll)| prior + v.dot_dense(ll))
            .collect())
    }

    pub fn predict(&self, v: &SparseVector) -> Result<usize> {
        Ok(argmax(&self.scores(v)?))
    }
}

pub fn predict_mnb_scores(model: &NaiveBayesModel, v: &SparseVector) -> Result<Vec<f64>> {
    model.scores(v)
}

/// One binary (negative, positive) naive Bayes per label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvrNaiveBayes {
    pub members: Vec<NaiveBayesModel>,
}

pub fn train_mnb_ovr(
    vectors: &[SparseVector],
    label_sets: &[Vec<usize>],
    n_labels: usize,
    n_features: usize,
    alpha: f64,
) -> Result<OvrNaiveBayes> {
    let members = (0..n_labels)
        .map(|l| {
            let binary: Vec<usize> = label_sets
                .iter()
                .map(|s| usize::from(s.contains(&l)))
                .collect();
            train_mnb(vectors, &binary, 2, n_features, alpha).map_err(|e| match e {
                Error::EmptyClass(_) => Error::EmptyClass(format!(
                    "label {l} ({} side)",
                    if binary.contains(&1) {
                        "negative"
                    } else {
                        "positive"
                    }
                )),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    Ok(OvrNaiveBayes { members })
}

impl OvrNaiveBayes {
    /// ln P(pos|x) − ln P(neg|x) per label.
    pub fn margins(&self, v: &SparseVector) -> Result<Vec<f64>> {
        self.members
            .iter()
            .map(|m| m.scores(v).map(|s| s[1] - s[0]))
            .collect()
    }

    /// Labels whose positive posterior wins, or the best label when none does.
    pub fn predict(&self, v: &SparseVector) -> Result<Vec<usize>> {
        Ok(threshold_decode(&self.margins(v)?, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OvrMode {
    MulticlassOvr,
    MultilabelOvr,
}

/// Per-class hyperplanes `w_c · x + b_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    pub mode: OvrMode,
    pub reg: f64,
    pub n_features: usize,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub reg: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            reg: DEFAULT_REG,
            epochs: 20,
        }
    }
}

/// Minimizes λ/2·‖w‖² + mean hinge loss for one binary problem by seeded
/// stochastic subgradient descent with step 1/(λt) and projection onto the
/// ball of radius 1/√λ. The bias is an extra constant-one feature and is
/// regularized with the weights. The returned (weights, bias) is the average
/// of the iterates over the second half of the steps; the last iterate alone
/// is dominated by the final few large steps.
pub fn train_binary_hinge(
    vectors: &[SparseVector],
    positive: &[bool],
    n_features: usize,
    params: SvmParams,
    seed: u64,
) -> Result<(Vec<f64>, f64)> {
    let SvmParams { reg, epochs } = params;
    if !(reg > 0.0 && reg.is_finite()) {
        return Err(Error::param("reg", format!("must be positive, got {reg}")));
    }
    if epochs == 0 {
        return Err(Error::param("epochs", "must be positive"));
    }
    if vectors.len() != positive.len() {
        return Err(Error::Shape(format!(
            "{} vectors vs {} labels",
            vectors.len(),
            positive.len()
        )));
    }
    if vectors.is_empty() {
        return Err(Error::Empty("training set"));
    }
    for v in vectors {
        check_features(v, n_features)?;
    }
    let dim = n_features + 1;
    // w = scale · raw, so the shrink step is O(1).
    let mut raw = vec![0.0; dim];
    let mut scale = 1.0;
    let mut sq_norm = 0.0; // ‖w‖² including the bias slot
                           // Lazy running sum of the averaged iterates: coordinate j has absorbed
                           // every step up to the point where `scale_sum` was `synced[j]`.
    let mut sum = vec![0.0; dim];
    let mut synced = vec![0.0; dim];
    let mut scale_sum = 0.0;
    let total = epochs * vectors.len();
    let average_from = total / 2;
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    let mut rng = seeded_rng(seed);
    let radius_sq = 1.0 / reg;
    let mut t = 0usize;
    let flush_all = |raw: &[f64], sum: &mut [f64], synced: &mut [f64], scale_sum: f64| {
        for j in 0..raw.len() {
            sum[j] += raw[j] * (scale_sum - synced[j]);
            synced[j] = scale_sum;
        }
    };
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (reg * t as f64);
            let y = if positive[i] { 1.0 } else { -1.0 };
            let x = &vectors[i];
            let margin = y * scale * (x.dot_dense(&raw) + raw[n_features]);
            let shrink = 1.0 - eta * reg;
            if shrink <= 0.0 {
                flush_all(&raw, &mut sum, &mut synced, scale_sum);
                raw.iter_mut().for_each(|w| *w = 0.0);
                scale = 1.0;
                sq_norm = 0.0;
            } else {
                scale *= shrink;
                sq_norm *= shrink * shrink;
            }
            if margin < 1.0 {
                let step = eta * y / scale;
                for (j, xj) in x.iter().chain(std::iter::once((n_features as u32, 1.0))) {
                    let j = j as usize;
                    sum[j] += raw[j] * (scale_sum - synced[j]);
                    synced[j] = scale_sum;
                    let old = raw[j];
                    raw[j] += step * xj;
                    sq_norm += scale * scale * (raw[j] * raw[j] - old * old);
                }
            }
            if sq_norm > radius_sq {
                let f = (radius_sq / sq_norm).sqrt();
                scale *= f;
                sq_norm = radius_sq;
            }
            if t > average_from {
                scale_sum += scale;
            }
            if scale < 1e-6 {
                flush_all(&raw, &mut sum, &mut synced, scale_sum);
                raw.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
                // Later steps are measured against the rescaled weights.
                scale_sum = 0.0;
                synced.iter_mut().for_each(|s| *s = 0.0);
            }
        }
    }
    flush_all(&raw, &mut sum, &mut synced, scale_sum);
    let count = (total - average_from) as f64;
    let w: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let bias = w[n_features];
    Ok((w[..n_features].to_vec(), bias))
}

/// One binary hinge-loss classifier per class, the class's items against
/// all others. Every class uses the same seed.
pub fn train_linear_ovr(
    vectors: &[SparseVector],
    label_sets: &[Vec<usize>],
    n_classes: usize,
    n_features: usize,
    mode: OvrMode,
    params: SvmParams,
    seed: u64,
) -> Result<LinearClassifier> {
    if vectors.len() != label_sets.len() {
        return Err(Error::Shape(format!(
            "{} vectors vs {} label sets",
            vectors.len(),
            label_sets.len()
        )));
    }
    let mut weights = Vec::with_capacity(n_classes);
    let mut biases = Vec::with_capacity(n_classes);
    for c in 0..n_classes {
        let positive: Vec<bool> = label_sets.iter().map(|s| s.contains(&c)).collect();
        if !positive.contains(&true) {
            return Err(Error::EmptyClass(format!("class {c}")));
        }
        if !positive.contains(&false) {
            return Err(Error::EmptyClass(format!("complement of class {c}")));
        }
        let (w, b) = train_binary_hinge(vectors, &positive, n_features, params, seed)?;
        weights.push(w);
        biases.push(b);
    }
    Ok(LinearClassifier {
        mode,
        reg: params.reg,
        n_features,
        weights,
        biases,
    })
}

impl LinearClassifier {
    pub fn decision_values(&self, v: &SparseVector) -> Result<Vec<f64>> {
        check_features(v, self.n_features)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| v.dot_dense(w) + b)
            .collect())
    }

    pub fn decode(&self, v: &SparseVector) -> Result<Vec<usize>> {
        let values = self.decision_values(v)?;
        Ok(decode_values(self.mode, &values))
    }
}

/// Argmax for multiclass; positive decision values (argmax fallback) for
/// multilabel.
pub fn decode_values(mode: OvrMode, values: &[f64]) -> Vec<usize> {
    match mode {
        OvrMode::MulticlassOvr => vec![argmax(values)],
        OvrMode::MultilabelOvr => threshold_decode(values, 0.0),
    }
}

pub fn decode_linear(classifier: &LinearClassifier, v: &SparseVector) -> Result<Vec<usize>> {
    classifier.decode(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn worked_example() {
        // x=0, y=1, z=2; d1 = "x x y" → A, d2 = "y z" → B.
        let docs = [doc(&[(0, 2.0), (1, 1.0)]), doc(&[(1, 1.0), (2, 1.0)])];
        let m = train_mnb(&docs, &[0, 1], 2, 3, 1.0).unwrap();
        assert_eq!(m.log_likelihoods[0][0].exp(), 0.5);
        assert!((m.log_likelihoods[1][0].exp() - 0.2).abs() < 1e-15);
        assert_eq!(m.predict(&doc(&[(0, 1.0)])).unwrap(), 0);
    }

    #[test]
    fn probabilities_are_normalized() {
        let docs = [
            doc(&[(0, 2.0), (3, 1.0)]),
            doc(&[(1, 5.0)]),
            doc(&[(2, 1.0)]),
        ];
        let m = train_mnb(&docs, &[0, 1, 1], 2, 4, 0.5).unwrap();
        let priors: f64 = m.log_priors.iter().map(|p| p.exp()).sum();
        assert!((priors - 1.0).abs() < 1e-12);
        for row in &m.log_likelihoods {
            let s: f64 = row.iter().map(|l| l.exp()).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_classes_share_likelihoods() {
        let docs = [doc(&[(0, 1.0), (1, 2.0)]), doc(&[(0, 1.0), (1, 2.0)])];
        let m = train_mnb(&docs, &[0, 1], 2, 3, 1.0).unwrap();
        assert_eq!(m.log_likelihoods[0], m.log_likelihoods[1]);
    }

    #[test]
    fn heavy_smoothing_is_uniform() {
        let docs = [doc(&[(0, 9.0)]), doc(&[(2, 4.0)])];
        let m = train_mnb(&docs, &[0, 1], 2, 3, 1e6).unwrap();
        for row in &m.log_likelihoods {
            for l in row {
                assert!((l.exp() - 1.0 / 3.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn empty_document_follows_priors() {
        let docs = [doc(&[(0, 1.0)]), doc(&[(1, 1.0)]), doc(&[(1, 2.0)])];
        let m = train_mnb(&docs, &[0, 1, 1], 2, 2, 1.0).unwrap();
        assert_eq!(m.predict(&SparseVector::default()).unwrap(), 1);
    }

    #[test]
    fn empty_class_rejected() {
        let docs = [doc(&[(0, 1.0)])];
        assert!(matches!(
            train_mnb(&docs, &[0], 2, 1, 1.0),
            Err(Error::EmptyClass(_))
        ));
        assert!(train_mnb(&docs, &[0], 1, 1, 0.0).is_err());
    }

    #[test]
    fn out_of_range_feature_is_shape_error() {
        let docs = [doc(&[(0, 1.0)]), doc(&[(1, 1.0)])];
        let m = train_mnb(&docs, &[0, 1], 2, 2, 1.0).unwrap();
        assert!(matches!(m.scores(&doc(&[(5, 1.0)])), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn argmax_ignores_constant_shift(scores in proptest::collection::vec(-50.0f64..50.0, 1..8), shift in -1e3f64..1e3) {
            let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
            // Shifts can merge near-ties through rounding; compare only clear winners.
            let best = argmax(&scores);
            let runner_up = scores.iter().enumerate().filter(|(i, _)| *i != best).map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
            prop_assume!(scores[best] - runner_up > 1e-9);
            prop_assert_eq!(best, argmax(&shifted));
        }
    }

    fn separable() -> (Vec<SparseVector>, Vec<Vec<usize>>) {
        let vectors = vec![
            doc(&[(0, 2.0), (1, 0.1)]),
            doc(&[(0, 1.5), (1, 0.3)]),
            doc(&[(0, 0.2), (1, 2.0)]),
            doc(&[(0, 0.1), (1, 1.4)]),
        ];
        (vectors, vec![vec![0], vec![0], vec![1], vec![1]])
    }

    #[test]
    fn separable_toy_is_fit_exactly() {
        let (vectors, labels) = separable();
        let params = SvmParams {
            reg: 1e-2,
            epochs: 50,
        };
        let clf =
            train_linear_ovr(&vectors, &labels, 2, 2, OvrMode::MulticlassOvr, params, 3).unwrap();
        for (v, l) in vectors.iter().zip(&labels) {
            assert_eq!(&clf.decode(v).unwrap(), l);
        }
        let again =
            train_linear_ovr(&vectors, &labels, 2, 2, OvrMode::MulticlassOvr, params, 3).unwrap();
        assert_eq!(clf, again);
    }

    #[test]
    fn duplicated_data_keeps_the_boundary() {
        let (vectors, labels) = separable();
        let params = SvmParams {
            reg: 1e-2,
            epochs: 50,
        };
        let clf =
            train_linear_ovr(&vectors, &labels, 2, 2, OvrMode::MulticlassOvr, params, 3).unwrap();
        let doubled_v: Vec<_> = vectors.iter().chain(&vectors).cloned().collect();
        let doubled_l: Vec<_> = labels.iter().chain(&labels).cloned().collect();
        let clf2 = train_linear_ovr(
            &doubled_v,
            &doubled_l,
            2,
            2,
            OvrMode::MulticlassOvr,
            params,
            3,
        )
        .unwrap();
        let probes = [
            doc(&[(0, 3.0)]),
            doc(&[(1, 3.0)]),
            doc(&[(0, 1.0), (1, 0.2)]),
            doc(&[(0, 0.2), (1, 1.0)]),
        ];
        for p in &probes {
            let a = clf.decision_values(p).unwrap();
            let b = clf2.decision_values(p).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.signum(), y.signum());
            }
        }
    }

    #[test]
    fn ovr_member_equals_binary_training() {
        let (vectors, labels) = separable();
        let params = SvmParams {
            reg: 1e-2,
            epochs: 10,
        };
        let clf =
            train_linear_ovr(&vectors, &labels, 2, 2, OvrMode::MultilabelOvr, params, 11).unwrap();
        let positive: Vec<bool> = labels.iter().map(|l| l.contains(&0)).collect();
        let (w, b) = train_binary_hinge(&vectors, &positive, 2, params, 11).unwrap();
        assert_eq!(clf.weights[0], w);
        assert_eq!(clf.biases[0], b);
    }

    #[test]
    fn missing_positives_name_the_class() {
        let (vectors, _) = separable();
        let labels = vec![vec![0]; 4];
        match train_linear_ovr(
            &vectors,
            &labels,
            2,
            2,
            OvrMode::MultilabelOvr,
            SvmParams::default(),
            1,
        ) {
            Err(Error::EmptyClass(c)) => assert!(c.contains('0') || c.contains('1')),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn decoding_rules() {
        assert_eq!(
            decode_values(OvrMode::MultilabelOvr, &[-1.0, 2.0, 0.5]),
            [1, 2]
        );
        assert_eq!(
            decode_values(OvrMode::MultilabelOvr, &[-0.1, -3.0, -2.0]),
            [0]
        );
        assert_eq!(decode_values(OvrMode::MulticlassOvr, &[3.0, 3.0, 1.0]), [0]);
        let (vectors, labels) = separable();
        let clf = train_linear_ovr(
            &vectors,
            &labels,
            2,
            2,
            OvrMode::MulticlassOvr,
            SvmParams::default(),
            1,
        )
        .unwrap();
        assert!(matches!(
            clf.decode(&doc(&[(7, 1.0)])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn multilabel_mnb() {
        let vectors = vec![
            doc(&[(0, 3.0)]),
            doc(&[(1, 3.0)]),
            doc(&[(0, 2.0), (1, 2.0)]),
            doc(&[(2, 3.0)]),
        ];
        let labels = vec![vec![0], vec![1], vec![0, 1], vec![2]];
        let m = train_mnb_ovr(&vectors, &labels, 3, 3, 1.0).unwrap();
        assert_eq!(m.predict(&doc(&[(0, 4.0)])).unwrap(), [0]);
        assert_eq!(m.predict(&doc(&[(2, 4.0)])).unwrap(), [2]);
        let bad = vec![vec![0]; 4];
        assert!(train_mnb_ovr(&vectors, &bad, 2, 3, 1.0).is_err());
    }
}
