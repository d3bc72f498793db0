//! Model specifications, training dispatch over every classifier family and
//! the serialized artifacts that carry a trained model together with its
//! feature space.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{write_atomic, Problem, TextPart};
use crate::datasets::{sha256_hex, DatasetKind, LabeledDataset, TagCatalog};
use crate::decode::{argmax, threshold_decode};
use crate::derive_seed;
use crate::ensemble::{majority_vote, sum_activation_decode, EnsembleScheme, DEFAULT_MEMBERS};
use crate::error::{Error, Result};
use crate::features::{
    encode_sequence, NgramVocabulary, PretrainedVectors, SparseVector, TfIdf, TokenSequence,
    Tokenizer, Vocabulary,
};
use crate::linear_models::{
    train_linear_ovr, train_mnb, train_mnb_ovr, LinearClassifier, NaiveBayesModel, OvrMode,
    OvrNaiveBayes, SvmParams, DEFAULT_ALPHA,
};
use crate::neural::{
    fit, predict_activations, AdamConfig, CnnConfig, CnnModel, LossKind, MlpModel, NeuralParams,
    TrainConfig,
};

pub const ARTIFACT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelFamily {
    Mnb,
    Svm,
    Mlp,
    Cnn,
    CnnEnsemble,
}

impl ModelFamily {
    pub const ALL: [ModelFamily; 5] = [
        ModelFamily::Mnb,
        ModelFamily::Svm,
        ModelFamily::Mlp,
        ModelFamily::Cnn,
        ModelFamily::CnnEnsemble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::Mnb => "mnb",
            ModelFamily::Svm => "svm",
            ModelFamily::Mlp => "mlp",
            ModelFamily::Cnn => "cnn",
            ModelFamily::CnnEnsemble => "cnn-ensemble",
        }
    }

    pub fn uses_sequences(self) -> bool {
        matches!(self, ModelFamily::Cnn | ModelFamily::CnnEnsemble)
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::param("model", format!("unknown family {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Counts,
    Tfidf,
}

/// Everything needed to train one model from a labeled dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub text_part: TextPart,
    pub tokenizer: Tokenizer,
    /// Bag-of-words families only.
    pub weighting: Weighting,
    pub ngram_orders: Vec<usize>,
    pub min_count: usize,
    pub alpha: f64,
    pub svm: SvmParams,
    pub neural: NeuralParams,
    /// Pretrained word vectors for the CNN; without them the embedding is
    /// learned from a random start.
    pub embeddings: Option<PathBuf>,
    pub ensemble_members: usize,
    /// `None` picks majority voting for multiclass data and summed
    /// activations for multilabel data.
    pub ensemble_scheme: Option<EnsembleScheme>,
}

impl ModelSpec {
    pub fn new(family: ModelFamily) -> Self {
        ModelSpec {
            family,
            text_part: TextPart::Full,
            tokenizer: Tokenizer::default(),
            weighting: Weighting::Counts,
            ngram_orders: vec![1, 2],
            min_count: 2,
            alpha: DEFAULT_ALPHA,
            svm: SvmParams::default(),
            neural: NeuralParams::default(),
            embeddings: None,
            ensemble_members: DEFAULT_MEMBERS,
            ensemble_scheme: None,
        }
    }

    pub fn scheme_for(&self, kind: DatasetKind) -> EnsembleScheme {
        self.ensemble_scheme.unwrap_or(match kind {
            DatasetKind::Multiclass => EnsembleScheme::MajorityVote,
            DatasetKind::Multilabel => EnsembleScheme::SumActivation,
        })
    }

    /// Short human-readable name, e.g. `svm (tfidf)` or `cnn (glove)`.
    pub fn label(&self) -> String {
        let detail = if self.family.uses_sequences() {
            if self.embeddings.is_some() {
                "pretrained"
            } else {
                "twe"
            }
        } else {
            match self.weighting {
                Weighting::Counts => "bow",
                Weighting::Tfidf => "tfidf",
            }
        };
        format!("{} ({detail})", self.family)
    }
}

/// Fitted text representation of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureSpace {
    Ngrams {
        tokenizer: Tokenizer,
        part: TextPart,
        vocab: NgramVocabulary,
        tfidf: Option<TfIdf>,
    },
    Sequences {
        tokenizer: Tokenizer,
        part: TextPart,
        vocab: Vocabulary,
        max_len: usize,
    },
}

fn tokens_of(tokenizer: &Tokenizer, part: TextPart, problem: &Problem) -> Result<Vec<String>> {
    Ok(tokenizer.tokenize(&problem.text(part)?.text))
}

impl FeatureSpace {
    /// Fits vocabulary (and idf weights) on the given training problems only.
    pub fn fit(spec: &ModelSpec, problems: &[&Problem]) -> Result<Self> {
        let docs = problems
            .iter()
            .map(|p| tokens_of(&spec.tokenizer, spec.text_part, p))
            .collect::<Result<Vec<_>>>()?;
        if spec.family.uses_sequences() {
            let vocab = Vocabulary::build(docs.iter().map(Vec::as_slice), spec.min_count);
            return Ok(FeatureSpace::Sequences {
                tokenizer: spec.tokenizer,
                part: spec.text_part,
                vocab,
                max_len: spec.neural.max_len,
            });
        }
        let vocab = NgramVocabulary::build(
            docs.iter().map(Vec::as_slice),
            &spec.ngram_orders,
            spec.min_count,
        );
        let tfidf = match spec.weighting {
            Weighting::Counts => None,
            Weighting::Tfidf => {
                let counts: Vec<SparseVector> = docs.iter().map(|d| vocab.vectorize(d)).collect();
                Some(TfIdf::fit(&counts, vocab.len()))
            }
        };
        Ok(FeatureSpace::Ngrams {
            tokenizer: spec.tokenizer,
            part: spec.text_part,
            vocab,
            tfidf,
        })
    }

    pub fn n_features(&self) -> usize {
        match self {
            FeatureSpace::Ngrams { vocab, .. } => vocab.len(),
            FeatureSpace::Sequences { vocab, .. } => vocab.len(),
        }
    }

    pub fn vocab_fingerprint(&self) -> String {
        match self {
            FeatureSpace::Ngrams { vocab, .. } => vocab.fingerprint(),
            FeatureSpace::Sequences { vocab, .. } => vocab.fingerprint(),
        }
    }

    pub fn vectorize(&self, problem: &Problem) -> Result<SparseVector> {
        match self {
            FeatureSpace::Ngrams {
                tokenizer,
                part,
                vocab,
                tfidf,
            } => {
                let counts = vocab.vectorize(&tokens_of(tokenizer, *part, problem)?);
                Ok(match tfidf {
                    Some(t) => t.transform(&counts),
                    None => counts,
                })
            }
            FeatureSpace::Sequences { .. } => Err(Error::Artifact(
                "sequence features cannot be vectorized".into(),
            )),
        }
    }

    pub fn encode(&self, problem: &Problem) -> Result<TokenSequence> {
        match self {
            FeatureSpace::Sequences {
                tokenizer,
                part,
                vocab,
                max_len,
            } => encode_sequence(&tokens_of(tokenizer, *part, problem)?, vocab, *max_len),
            FeatureSpace::Ngrams { .. } => Err(Error::Artifact(
                "n-gram features cannot be encoded as sequences".into(),
            )),
        }
    }

    fn sequence_vocab(&self) -> Option<&Vocabulary> {
        match self {
            FeatureSpace::Sequences { vocab, .. } => Some(vocab),
            FeatureSpace::Ngrams { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Classifier {
    Mnb(NaiveBayesModel),
    MnbOvr(OvrNaiveBayes),
    Svm(LinearClassifier),
    Mlp(MlpModel),
    Cnn(CnnModel),
}

/// One trained classifier with everything needed to apply it to new text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub family: ModelFamily,
    pub kind: DatasetKind,
    pub catalog: Vec<String>,
    pub spec: ModelSpec,
    pub vocab_sha256: String,
    pub features: FeatureSpace,
    pub classifier: Classifier,
    /// Mean training loss per epoch (neural families).
    pub loss_trace: Vec<f64>,
}

impl ModelArtifact {
    /// Raw per-class scores: log posteriors or margins for naive Bayes,
    /// decision values for the SVM, output activations for the networks.
    pub fn activations(&self, problems: &[&Problem]) -> Result<Vec<Vec<f64>>> {
        match &self.classifier {
            Classifier::Mnb(m) => problems
                .iter()
                .map(|p| m.scores(&self.features.vectorize(p)?))
                .collect(),
            Classifier::MnbOvr(m) => problems
                .iter()
                .map(|p| m.margins(&self.features.vectorize(p)?))
                .collect(),
            Classifier::Svm(m) => problems
                .iter()
                .map(|p| m.decision_values(&self.features.vectorize(p)?))
                .collect(),
            Classifier::Mlp(m) => {
                let xs = problems
                    .iter()
                    .map(|p| self.features.vectorize(p))
                    .collect::<Result<Vec<_>>>()?;
                predict_activations(m, &xs, self.spec.neural.batch_size)
            }
            Classifier::Cnn(m) => {
                let xs = problems
                    .iter()
                    .map(|p| self.features.encode(p))
                    .collect::<Result<Vec<_>>>()?;
                predict_activations(m, &xs, self.spec.neural.batch_size)
            }
        }
    }

    pub fn predict(&self, problems: &[&Problem]) -> Result<Vec<Vec<usize>>> {
        let acts = self.activations(problems)?;
        Ok(acts.iter().map(|a| decode(self.kind, a)).collect())
    }
}

/// Argmax for multiclass data; positive activations (argmax fallback) for
/// multilabel data.
pub fn decode(kind: DatasetKind, activations: &[f64]) -> Vec<usize> {
    match kind {
        DatasetKind::Multiclass => vec![argmax(activations)],
        DatasetKind::Multilabel => threshold_decode(activations, 0.0),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel {
    pub scheme: EnsembleScheme,
    pub members: Vec<ModelArtifact>,
}

impl EnsembleModel {
    pub fn predict(&self, problems: &[&Problem]) -> Result<Vec<Vec<usize>>> {
        let first = self
            .members
            .first()
            .ok_or(Error::Empty("ensemble members"))?;
        let kind = first.kind;
        let per_member = self
            .members
            .iter()
            .map(|m| m.activations(problems))
            .collect::<Result<Vec<_>>>()?;
        (0..problems.len())
            .map(|i| {
                let acts: Vec<Vec<f64>> = per_member.iter().map(|m| m[i].clone()).collect();
                match (self.scheme, kind) {
                    (EnsembleScheme::MajorityVote, DatasetKind::Multiclass) => {
                        let votes: Vec<usize> = acts.iter().map(|a| argmax(a)).collect();
                        Ok(vec![majority_vote(&votes)?])
                    }
                    (EnsembleScheme::MajorityVote, DatasetKind::Multilabel) => Err(Error::param(
                        "ensemble scheme",
                        "majority voting needs multiclass data",
                    )),
                    (EnsembleScheme::SumActivation, DatasetKind::Multiclass) => {
                        Ok(vec![argmax(&crate::ensemble::sum_activations(&acts)?)])
                    }
                    (EnsembleScheme::SumActivation, DatasetKind::Multilabel) => {
                        sum_activation_decode(&acts)
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Single(ModelArtifact),
    Ensemble(EnsembleModel),
}

impl TrainedModel {
    pub fn predict(&self, problems: &[&Problem]) -> Result<Vec<Vec<usize>>> {
        match self {
            TrainedModel::Single(m) => m.predict(problems),
            TrainedModel::Ensemble(e) => e.predict(problems),
        }
    }

    pub fn kind(&self) -> DatasetKind {
        match self {
            TrainedModel::Single(m) => m.kind,
            TrainedModel::Ensemble(e) => e.members[0].kind,
        }
    }

    pub fn catalog(&self) -> &[String] {
        match self {
            TrainedModel::Single(m) => &m.catalog,
            TrainedModel::Ensemble(e) => &e.members[0].catalog,
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        match self {
            TrainedModel::Single(m) => &m.spec,
            TrainedModel::Ensemble(e) => &e.members[0].spec,
        }
    }

    pub fn members(&self) -> Vec<&ModelArtifact> {
        match self {
            TrainedModel::Single(m) => vec![m],
            TrainedModel::Ensemble(e) => e.members.iter().collect(),
        }
    }
}

fn targets(dataset: &LabeledDataset) -> Vec<Vec<f64>> {
    let n = dataset.n_classes();
    dataset
        .items
        .iter()
        .map(|it| {
            let mut t = vec![0.0; n];
            for &l in &it.labels {
                t[l] = 1.0;
            }
            t
        })
        .collect()
}

fn train_member(
    dataset: &LabeledDataset,
    spec: &ModelSpec,
    features: &FeatureSpace,
    pretrained: Option<&PretrainedVectors>,
    seed: u64,
) -> Result<ModelArtifact> {
    let kind = dataset.kind;
    let n_classes = dataset.n_classes();
    let problems: Vec<&Problem> = dataset.items.iter().map(|it| &it.problem).collect();
    let neural = &spec.neural;
    let train_config = |loss| TrainConfig {
        epochs: neural.epochs,
        batch_size: neural.batch_size,
        adam: AdamConfig {
            learning_rate: neural.learning_rate,
            ..AdamConfig::default()
        },
        loss,
    };
    let mut loss_trace = Vec::new();
    let classifier = match spec.family {
        ModelFamily::Mnb | ModelFamily::Svm | ModelFamily::Mlp => {
            let xs = problems
                .iter()
                .map(|p| features.vectorize(p))
                .collect::<Result<Vec<_>>>()?;
            let n_features = features.n_features();
            match (spec.family, kind) {
                (ModelFamily::Mnb, DatasetKind::Multiclass) => Classifier::Mnb(train_mnb(
                    &xs,
                    &dataset.classes(),
                    n_classes,
                    n_features,
                    spec.alpha,
                )?),
                (ModelFamily::Mnb, DatasetKind::Multilabel) => Classifier::MnbOvr(train_mnb_ovr(
                    &xs,
                    &dataset.label_sets(),
                    n_classes,
                    n_features,
                    spec.alpha,
                )?),
                (ModelFamily::Svm, _) => {
                    let mode = match kind {
                        DatasetKind::Multiclass => OvrMode::MulticlassOvr,
                        DatasetKind::Multilabel => OvrMode::MultilabelOvr,
                    };
                    Classifier::Svm(train_linear_ovr(
                        &xs,
                        &dataset.label_sets(),
                        n_classes,
                        n_features,
                        mode,
                        spec.svm,
                        seed,
                    )?)
                }
                _ => {
                    let mut sizes = vec![n_features];
                    sizes.extend(&neural.hidden);
                    sizes.push(n_classes);
                    let mut model = MlpModel::new(&sizes, seed)?;
                    let loss = match kind {
                        DatasetKind::Multiclass => LossKind::CrossEntropySoftmax,
                        DatasetKind::Multilabel => neural.multilabel_mlp_loss,
                    };
                    loss_trace = fit(
                        &mut model,
                        &xs,
                        &targets(dataset),
                        &train_config(loss),
                        derive_seed(seed, 1),
                    )?;
                    Classifier::Mlp(model)
                }
            }
        }
        ModelFamily::Cnn | ModelFamily::CnnEnsemble => {
            let vocab = features
                .sequence_vocab()
                .ok_or_else(|| Error::Artifact("CNN needs a sequence feature space".into()))?;
            let matrix = match (&spec.embeddings, pretrained) {
                (Some(_), Some(v)) => Some(v.to_matrix(vocab, derive_seed(seed, 2))),
                (Some(path), None) => {
                    return Err(Error::param(
                        "embeddings",
                        format!("vectors from {} were not loaded", path.display()),
                    ))
                }
                (None, _) => None,
            };
            let config = CnnConfig {
                vocab_size: vocab.len(),
                embed_dim: matrix.as_ref().map_or(neural.embed_dim, |m| m.dim),
                filters_per_width: neural.filters_per_width,
                widths: neural.widths.clone(),
                n_classes,
                dropout: neural.dropout,
                trainable_embeddings: neural.trainable_embeddings,
            };
            let mut model = CnnModel::new(&config, matrix.as_ref(), seed)?;
            let xs = problems
                .iter()
                .map(|p| features.encode(p))
                .collect::<Result<Vec<_>>>()?;
            let loss = match kind {
                DatasetKind::Multiclass => LossKind::CrossEntropySoftmax,
                DatasetKind::Multilabel => neural.multilabel_cnn_loss,
            };
            loss_trace = fit(
                &mut model,
                &xs,
                &targets(dataset),
                &train_config(loss),
                derive_seed(seed, 1),
            )?;
            Classifier::Cnn(model)
        }
    };
    Ok(ModelArtifact {
        format_version: ARTIFACT_FORMAT_VERSION,
        family: spec.family,
        kind,
        catalog: dataset.catalog.tags().to_vec(),
        spec: spec.clone(),
        vocab_sha256: features.vocab_fingerprint(),
        features: features.clone(),
        classifier,
        loss_trace,
    })
}

/// Fits features on `dataset` and trains the model the spec names. Ensemble
/// member i uses seed `seed + i`.
pub fn train_model(
    dataset: &LabeledDataset,
    spec: &ModelSpec,
    pretrained: Option<&PretrainedVectors>,
    seed: u64,
) -> Result<TrainedModel> {
    if dataset.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let problems: Vec<&Problem> = dataset.items.iter().map(|it| &it.problem).collect();
    let features = FeatureSpace::fit(spec, &problems)?;
    if spec.family == ModelFamily::CnnEnsemble {
        if spec.ensemble_members == 0 {
            return Err(Error::param("ensemble members", "need at least one"));
        }
        let members = (0..spec.ensemble_members as u64)
            .map(|i| train_member(dataset, spec, &features, pretrained, seed.wrapping_add(i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainedModel::Ensemble(EnsembleModel {
            scheme: spec.scheme_for(dataset.kind),
            members,
        }))
    } else {
        Ok(TrainedModel::Single(train_member(
            dataset, spec, &features, pretrained, seed,
        )?))
    }
}

/// Loads the pretrained vectors a spec asks for, keeping only words that
/// occur in `problems`.
pub fn load_pretrained(
    spec: &ModelSpec,
    problems: &[Problem],
) -> Result<Option<PretrainedVectors>> {
    let Some(path) = &spec.embeddings else {
        return Ok(None);
    };
    if !spec.family.uses_sequences() {
        return Ok(None);
    }
    let mut words = std::collections::HashSet::new();
    for p in problems {
        words.extend(tokens_of(&spec.tokenizer, spec.text_part, p)?);
    }
    let keep = |w: &str| words.contains(w);
    PretrainedVectors::read(path, Some(&keep)).map(Some)
}

#[derive(Serialize, Deserialize)]
struct ArtifactProbe {
    artifact: String,
}

#[derive(Serialize)]
struct TaggedModel<'a> {
    artifact: &'static str,
    #[serde(flatten)]
    model: &'a ModelArtifact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub artifact: String,
    pub format_version: u32,
    pub scheme: EnsembleScheme,
    /// Member files relative to the manifest's directory.
    pub members: Vec<String>,
    pub member_sha256: Vec<String>,
}

fn model_json(model: &ModelArtifact) -> Result<Vec<u8>> {
    serde_json::to_vec(&TaggedModel {
        artifact: "model",
        model,
    })
    .map_err(|e| Error::Artifact(e.to_string()))
}

/// Writes a model atomically. An ensemble becomes a manifest at `path`
/// plus one member file per model next to it.
pub fn save_model(path: impl AsRef<Path>, model: &TrainedModel) -> Result<()> {
    let path = path.as_ref();
    match model {
        TrainedModel::Single(m) => write_atomic(path, &model_json(m)?),
        TrainedModel::Ensemble(e) => {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Artifact(format!("bad artifact path {}", path.display())))?;
            let dir = path.parent().unwrap_or_else(|| Path::new(""));
            let mut members = Vec::new();
            let mut hashes = Vec::new();
            for (i, m) in e.members.iter().enumerate() {
                let name = format!("{stem}.member{i}.json");
                let bytes = model_json(m)?;
                hashes.push(sha256_hex(&bytes));
                write_atomic(&dir.join(&name), &bytes)?;
                members.push(name);
            }
            let manifest = EnsembleManifest {
                artifact: "ensemble".into(),
                format_version: ARTIFACT_FORMAT_VERSION,
                scheme: e.scheme,
                members,
                member_sha256: hashes,
            };
            let bytes =
                serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Artifact(e.to_string()))?;
            write_atomic(path, &bytes)
        }
    }
}

fn read_model_file(path: &Path) -> Result<(ModelArtifact, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let model: ModelArtifact = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))?;
    if model.format_version != ARTIFACT_FORMAT_VERSION {
        return Err(Error::Artifact(format!(
            "{}: unsupported format version {}",
            path.display(),
            model.format_version
        )));
    }
    Ok((model, bytes))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let probe: ArtifactProbe = serde_json::from_slice(&bytes)
        .map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))?;
    match probe.artifact.as_str() {
        "model" => Ok(TrainedModel::Single(read_model_file(path)?.0)),
        "ensemble" => {
            let manifest: EnsembleManifest = serde_json::from_slice(&bytes)
                .map_err(|e| Error::Artifact(format!("{}: {e}", path.display())))?;
            if manifest.members.len() != manifest.member_sha256.len() || manifest.members.is_empty()
            {
                return Err(Error::Artifact(format!(
                    "{}: malformed member list",
                    path.display()
                )));
            }
            let dir = path.parent().unwrap_or_else(|| Path::new(""));
            let mut members = Vec::new();
            for (name, hash) in manifest.members.iter().zip(&manifest.member_sha256) {
                let member_path = dir.join(name);
                let (m, raw) = read_model_file(&member_path)?;
                if &sha256_hex(&raw) != hash {
                    return Err(Error::Artifact(format!(
                        "{}: checksum mismatch",
                        member_path.display()
                    )));
                }
                members.push(m);
            }
            let first = &members[0];
            if members.iter().any(|m| {
                m.catalog != first.catalog
                    || m.vocab_sha256 != first.vocab_sha256
                    || m.kind != first.kind
            }) {
                return Err(Error::Artifact(format!(
                    "{}: members disagree on catalog or feature space",
                    path.display()
                )));
            }
            Ok(TrainedModel::Ensemble(EnsembleModel {
                scheme: manifest.scheme,
                members,
            }))
        }
        other => Err(Error::Artifact(format!(
            "{}: unknown artifact type {other:?}",
            path.display()
        ))),
    }
}

/// Catalog of a trained model as a [`TagCatalog`].
pub fn model_catalog(model: &TrainedModel) -> Result<TagCatalog> {
    TagCatalog::new(model.catalog().to_vec())
}
