//! Tokenization, vocabularies, sparse n-gram vectors with optional TF-IDF
//! weighting, padded token-id sequences and pretrained embedding loading.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Reserved id for out-of-vocabulary tokens.
pub const UNK_ID: u32 = 0;
/// Reserved id for padding positions.
pub const PAD_ID: u32 = 1;
/// Sequences are padded to at least the widest convolution filter.
pub const MIN_SEQUENCE_LEN: usize = 5;

/// Rule-based tokenizer: whitespace separates chunks; inside a chunk every
/// maximal run of letters or of digits is a token and every other character
/// stands alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    pub lowercase: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer { lowercase: true }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CharClass {
    Letter,
    Digit,
    Other,
}

fn char_class(c: char) -> CharClass {
    if c.is_alphabetic() {
        CharClass::Letter
    } else if c.is_numeric() {
        CharClass::Digit
    } else {
        CharClass::Other
    }
}

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let owned;
        let text = if self.lowercase {
            owned = text.to_lowercase();
            owned.as_str()
        } else {
            text
        };
        let mut tokens = Vec::new();
        for chunk in text.split_whitespace() {
            let mut current = String::new();
            let mut current_class = CharClass::Other;
            for c in chunk.chars() {
                let class = char_class(c);
                if !current.is_empty() && (class != current_class || class == CharClass::Other) {
                    tokens.push(std::mem::take(&mut current));
                }
                current.push(c);
                current_class = class;
            }
            if !current.is_empty() {
                tokens.push(current);
            }
        }
        tokens
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

fn count_tokens<'a>(docs: impl IntoIterator<Item = &'a [String]>) -> HashMap<&'a str, usize> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        for t in doc {
            *counts.entry(t.as_str()).or_default() += 1;
        }
    }
    counts
}

fn fingerprint<'a>(
    kind: &str,
    min_count: usize,
    items: impl Iterator<Item = &'a String>,
) -> String {
    let mut h = Sha256::new();
    h.update(kind.as_bytes());
    h.update(min_count.to_le_bytes());
    for item in items {
        h.update((item.len() as u64).to_le_bytes());
        h.update(item.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Word vocabulary for sequence models. Ids 0 and 1 are UNK and PAD; real
/// tokens follow in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    min_count: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    min_count: usize,
    tokens: Vec<String>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_tokens(r.tokens, r.min_count)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            min_count: v.min_count,
            tokens: v.tokens,
        }
    }
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>, min_count: usize) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32 + 2))
            .collect();
        Vocabulary {
            tokens,
            index,
            min_count,
        }
    }

    pub fn build<'a>(docs: impl IntoIterator<Item = &'a [String]>, min_count: usize) -> Self {
        let counts = count_tokens(docs);
        let mut tokens: Vec<String> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count.max(1))
            .map(|(t, _)| t.to_string())
            .collect();
        tokens.sort_unstable();
        Self::from_tokens(tokens, min_count)
    }

    /// Total id count including the two reserved ids.
    pub fn len(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn lookup(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Real tokens in id order (id = position + 2).
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn min_count(&self) -> usize {
        self.min_count
    }

    pub fn fingerprint(&self) -> String {
        fingerprint("words", self.min_count, self.tokens.iter())
    }
}

pub fn build_vocab<'a>(
    docs: impl IntoIterator<Item = &'a [String]>,
    min_count: usize,
) -> Vocabulary {
    Vocabulary::build(docs, min_count)
}

fn ngram_key(window: &[String]) -> String {
    window.join(" ")
}

/// Unigram/bigram (or any order) feature space for bag-of-words models.
/// Features are keyed by their tokens joined with a single space, which can
/// never occur inside a token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NgramRepr", into = "NgramRepr")]
pub struct NgramVocabulary {
    orders: Vec<usize>,
    min_count: usize,
    features: Vec<String>,
    index: HashMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct NgramRepr {
    orders: Vec<usize>,
    min_count: usize,
    features: Vec<String>,
}

impl From<NgramRepr> for NgramVocabulary {
    fn from(r: NgramRepr) -> Self {
        let index = r
            .features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        NgramVocabulary {
            orders: r.orders,
            min_count: r.min_count,
            features: r.features,
            index,
        }
    }
}

impl From<NgramVocabulary> for NgramRepr {
    fn from(v: NgramVocabulary) -> Self {
        NgramRepr {
            orders: v.orders,
            min_count: v.min_count,
            features: v.features,
        }
    }
}

impl NgramVocabulary {
    pub fn build<'a>(
        docs: impl IntoIterator<Item = &'a [String]>,
        orders: &[usize],
        min_count: usize,
    ) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            for &n in orders {
                if n == 0 || doc.len() < n {
                    continue;
                }
                for w in doc.windows(n) {
                    *counts.entry(ngram_key(w)).or_default() += 1;
                }
            }
        }
        let mut features: Vec<String> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count.max(1))
            .map(|(k, _)| k)
            .collect();
        features.sort_unstable();
        NgramRepr {
            orders: orders.to_vec(),
            min_count,
            features,
        }
        .into()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, id: u32) -> &str {
        &self.features[id as usize]
    }

    pub fn id(&self, key: &str) -> Option<u32> {
        self.index.get(key).copied()
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    /// Raw in-vocabulary n-gram counts of one document.
    pub fn vectorize(&self, tokens: &[String]) -> SparseVector {
        let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
        for &n in &self.orders {
            if n == 0 || tokens.len() < n {
                continue;
            }
            for w in tokens.windows(n) {
                if let Some(id) = self.index.get(&ngram_key(w)) {
                    *counts.entry(*id).or_default() += 1.0;
                }
            }
        }
        SparseVector::from_sorted(counts.into_iter())
    }

    pub fn fingerprint(&self) -> String {
        let orders: Vec<String> = self.orders.iter().map(|o| o.to_string()).collect();
        fingerprint(
            &format!("ngrams:{}", orders.join(",")),
            self.min_count,
            self.features.iter(),
        )
    }
}

pub fn vectorize_ngrams(tokens: &[String], vocab: &NgramVocabulary) -> SparseVector {
    vocab.vectorize(tokens)
}

/// Sparse feature vector with strictly increasing ids and no zero values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    fn from_sorted(pairs: impl Iterator<Item = (u32, f64)>) -> Self {
        let (indices, values) = pairs.filter(|&(_, v)| v != 0.0).unzip();
        SparseVector { indices, values }
    }

    /// Builds a vector from arbitrary pairs; duplicate ids are summed.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut map: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *map.entry(i).or_default() += v;
        }
        Self::from_sorted(map.into_iter())
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// One past the largest id, or 0.
    pub fn dim_bound(&self) -> usize {
        self.indices.last().map_or(0, |&i| i as usize + 1)
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b, mut acc) = (0, 0, 0.0);
        while a < self.indices.len() && b < other.indices.len() {
            match self.indices[a].cmp(&other.indices[b]) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    acc += self.values[a] * other.values[b];
                    a += 1;
                    b += 1;
                }
            }
        }
        acc
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i as usize]).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Smoothed inverse document frequencies fitted on training documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfIdf {
    pub idf: Vec<f64>,
}

impl TfIdf {
    /// idf(t) = ln((1 + N) / (1 + df(t))) + 1 over the given documents.
    pub fn fit(docs: &[SparseVector], n_features: usize) -> Self {
        let mut df = vec![0usize; n_features];
        for doc in docs {
            for &i in doc.indices() {
                df[i as usize] += 1;
            }
        }
        let n = docs.len() as f64;
        let idf = df
            .into_iter()
            .map(|d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        TfIdf { idf }
    }

    /// tf × idf followed by L2 normalization; zero vectors stay zero.
    pub fn transform(&self, doc: &SparseVector) -> SparseVector {
        let weighted: Vec<(u32, f64)> = doc
            .iter()
            .map(|(i, v)| (i, v * self.idf[i as usize]))
            .collect();
        let norm = weighted.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return SparseVector::default();
        }
        SparseVector::from_sorted(weighted.into_iter().map(|(i, v)| (i, v / norm)))
    }
}

pub fn tfidf_transform(train: &[SparseVector], n_features: usize) -> (TfIdf, Vec<SparseVector>) {
    let model = TfIdf::fit(train, n_features);
    let transformed = train.iter().map(|d| model.transform(d)).collect();
    (model, transformed)
}

/// Token ids ready for the convolutional model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    /// Token count before padding.
    pub length: usize,
}

impl TokenSequence {
    /// Length over which convolution windows are taken; positions beyond it
    /// are batch padding and never influence the output.
    pub fn effective_len(&self) -> usize {
        self.length.max(MIN_SEQUENCE_LEN).min(self.ids.len())
    }
}

/// Maps tokens to ids, keeps at most `max_len` of them and pads with PAD up
/// to [`MIN_SEQUENCE_LEN`].
pub fn encode_sequence(
    tokens: &[String],
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<TokenSequence> {
    if max_len < MIN_SEQUENCE_LEN {
        return Err(Error::param(
            "max_len",
            format!("must be at least {MIN_SEQUENCE_LEN}, got {max_len}"),
        ));
    }
    let mut ids: Vec<u32> = tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.lookup(t))
        .collect();
    let length = ids.len();
    if ids.len() < MIN_SEQUENCE_LEN {
        ids.resize(MIN_SEQUENCE_LEN, PAD_ID);
    }
    Ok(TokenSequence { ids, length })
}

/// Pads every sequence of a batch with PAD to the longest one.
pub fn pad_batch(batch: &mut [TokenSequence]) {
    let longest = batch.iter().map(|s| s.ids.len()).max().unwrap_or(0);
    for s in batch {
        s.ids.resize(longest, PAD_ID);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSource {
    Pretrained,
    RandomInit,
    Padding,
}

/// Vocabulary-aligned embedding rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    pub dim: usize,
    /// Row-major, `vocab.len() × dim`.
    pub values: Vec<f64>,
    pub provenance: Vec<RowSource>,
}

impl EmbeddingMatrix {
    pub fn rows(&self) -> usize {
        self.provenance.len()
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.values[id * self.dim..(id + 1) * self.dim]
    }
}

/// Word vectors read from a `word v1 … vd` text file.
#[derive(Debug, Clone, Default)]
pub struct PretrainedVectors {
    pub dim: usize,
    pub vectors: HashMap<String, Vec<f64>>,
}

impl PretrainedVectors {
    /// Parses the whole file; when `keep` is given, vectors for other words
    /// are validated but not retained.
    pub fn read(path: impl AsRef<Path>, keep: Option<&dyn Fn(&str) -> bool>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut dim = 0usize;
        let mut vectors = HashMap::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            let mut parts = line.split_whitespace();
            let Some(word) = parts.next() else { continue };
            let mut values = Vec::with_capacity(dim);
            for raw in parts {
                let v: f64 = raw.parse().map_err(|_| Error::Embedding {
                    line: line_no,
                    message: format!("unreadable number {raw:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Embedding {
                        line: line_no,
                        message: format!("non-finite value {raw:?}"),
                    });
                }
                values.push(v);
            }
            if dim == 0 {
                if values.is_empty() {
                    return Err(Error::Embedding {
                        line: line_no,
                        message: "no vector components".into(),
                    });
                }
                dim = values.len();
            } else if values.len() != dim {
                return Err(Error::Embedding {
                    line: line_no,
                    message: format!("dimension {} differs from {dim}", values.len()),
                });
            }
            if keep.map_or(true, |f| f(word)) {
                vectors.insert(word.to_string(), values);
            }
        }
        if dim == 0 {
            return Err(Error::Embedding {
                line: 0,
                message: "file contains no vectors".into(),
            });
        }
        Ok(PretrainedVectors { dim, vectors })
    }

    /// Aligns the vectors with a vocabulary. Missing words (and UNK) get
    /// U(−0.25, 0.25) rows drawn from `seed`; the PAD row is zero.
    pub fn to_matrix(&self, vocab: &Vocabulary, seed: u64) -> EmbeddingMatrix {
        let mut rng = crate::seeded_rng(seed);
        let dim = self.dim;
        let mut values = Vec::with_capacity(vocab.len() * dim);
        let mut provenance = Vec::with_capacity(vocab.len());
        let mut random_row = |values: &mut Vec<f64>| {
            for _ in 0..dim {
                values.push(rng.gen_range(-0.25..=0.25));
            }
        };
        random_row(&mut values);
        provenance.push(RowSource::RandomInit);
        values.extend(std::iter::repeat(0.0).take(dim));
        provenance.push(RowSource::Padding);
        for token in vocab.tokens() {
            match self.vectors.get(token) {
                Some(v) => {
                    values.extend_from_slice(v);
                    provenance.push(RowSource::Pretrained);
                }
                None => {
                    random_row(&mut values);
                    provenance.push(RowSource::RandomInit);
                }
            }
        }
        EmbeddingMatrix {
            dim,
            values,
            provenance,
        }
    }
}

pub fn load_embeddings(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<EmbeddingMatrix> {
    let keep = |w: &str| vocab.contains(w);
    Ok(PretrainedVectors::read(path, Some(&keep))?.to_matrix(vocab, seed))
}
