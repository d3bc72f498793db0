//! Convolutional sentence classifier: embedding lookup, one bank of 1-D
//! filters per width, rectifier, global max-pooling over positions,
//! dropout on the pooled features and a fully-connected output layer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ops::{relu, standard_normal, xavier_uniform};
use super::tensor::{gemm, MatRef, Tensor};
use super::Network;
use crate::error::{Error, Result};
use crate::features::{EmbeddingMatrix, RowSource, TokenSequence, PAD_ID};
use crate::{seeded_rng, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub filters_per_width: usize,
    pub widths: Vec<usize>,
    pub n_classes: usize,
    pub dropout: f64,
    pub trainable_embeddings: bool,
}

impl CnnConfig {
    /// 512 filters for each of the widths 3, 4 and 5.
    pub fn standard(vocab_size: usize, embed_dim: usize, n_classes: usize) -> Self {
        CnnConfig {
            vocab_size,
            embed_dim,
            filters_per_width: 512,
            widths: vec![3, 4, 5],
            n_classes,
            dropout: 0.5,
            trainable_embeddings: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvBank {
    pub width: usize,
    /// `filters × (width · embed_dim)`; row f is filter f unrolled over its window.
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnModel {
    pub embed_dim: usize,
    pub embedding: Tensor,
    pub provenance: Vec<RowSource>,
    pub trainable_embeddings: bool,
    pub banks: Vec<ConvBank>,
    /// `n_classes × (banks · filters)`.
    pub fc_weight: Tensor,
    pub fc_bias: Tensor,
    pub dropout: f64,
}

pub struct CnnCache {
    examples: Vec<ExampleCache>,
    /// Pooled features after dropout, `batch × features`.
    hidden: Tensor,
    /// Dropout scale per hidden unit (0 or 1/(1−p)); absent in eval mode.
    mask: Option<Vec<f64>>,
}

struct ExampleCache {
    len: usize,
    embedded: Vec<f64>,
    pooled_pre: Vec<Vec<f64>>,
    argpos: Vec<Vec<usize>>,
}

impl CnnModel {
    /// Xavier-initialized filters and output layer. Without pretrained
    /// vectors the embedding is drawn from N(0, 1); the PAD row is zero.
    pub fn new(
        config: &CnnConfig,
        pretrained: Option<&EmbeddingMatrix>,
        seed: u64,
    ) -> Result<Self> {
        if config.widths.is_empty() || config.filters_per_width == 0 || config.n_classes == 0 {
            return Err(Error::param(
                "cnn",
                "need at least one filter width, one filter and one class",
            ));
        }
        if !(0.0..1.0).contains(&config.dropout) {
            return Err(Error::param(
                "dropout",
                format!("must be in [0, 1), got {}", config.dropout),
            ));
        }
        let mut rng = seeded_rng(seed);
        let d = config.embed_dim;
        let (embedding, provenance) = match pretrained {
            Some(m) => {
                if m.dim != d || m.rows() != config.vocab_size {
                    return Err(Error::Shape(format!(
                        "embedding {}×{} vs vocabulary {}×{d}",
                        m.rows(),
                        m.dim,
                        config.vocab_size
                    )));
                }
                (
                    Tensor::from_vec(&[m.rows(), d], m.values.clone())?,
                    m.provenance.clone(),
                )
            }
            None => {
                let mut e = standard_normal(&[config.vocab_size, d], &mut rng);
                let mut provenance = vec![RowSource::RandomInit; config.vocab_size];
                if (PAD_ID as usize) < config.vocab_size {
                    e.row_mut(PAD_ID as usize).fill(0.0);
                    provenance[PAD_ID as usize] = RowSource::Padding;
                }
                (e, provenance)
            }
        };
        let f = config.filters_per_width;
        let banks = config
            .widths
            .iter()
            .map(|&w| {
                Ok(ConvBank {
                    width: w,
                    weight: xavier_uniform(&[f, w * d], w * d, w * f, &mut rng)?,
                    bias: Tensor::zeros(&[f]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let features = f * config.widths.len();
        Ok(CnnModel {
            embed_dim: d,
            embedding,
            provenance,
            trainable_embeddings: config.trainable_embeddings,
            banks,
            fc_weight: xavier_uniform(
                &[config.n_classes, features],
                features,
                config.n_classes,
                &mut rng,
            )?,
            fc_bias: Tensor::zeros(&[config.n_classes]),
            dropout: config.dropout,
        })
    }

    pub fn n_features(&self) -> usize {
        self.banks.iter().map(|b| b.bias.len()).sum()
    }

    pub fn max_width(&self) -> usize {
        self.banks.iter().map(|b| b.width).max().unwrap_or(0)
    }

    fn vocab_size(&self) -> usize {
        self.embedding.shape()[0]
    }

    /// Convolution, rectifier and max-pooling for one sequence.
    fn encode(&self, seq: &TokenSequence) -> Result<(ExampleCache, Vec<f64>)> {
        let len = seq.effective_len();
        if len < self.max_width() {
            return Err(Error::Shape(format!(
                "sequence of length {len} is shorter than the widest filter ({})",
                self.max_width()
            )));
        }
        let d = self.embed_dim;
        let mut embedded = Vec::with_capacity(len * d);
        for &id in &seq.ids[..len] {
            if id as usize >= self.vocab_size() {
                return Err(Error::Shape(format!(
                    "token id {id} outside vocabulary of {}",
                    self.vocab_size()
                )));
            }
            embedded.extend_from_slice(self.embedding.row(id as usize));
        }
        let mut features = Vec::with_capacity(self.n_features());
        let mut pooled_pre = Vec::with_capacity(self.banks.len());
        let mut argpos = Vec::with_capacity(self.banks.len());
        for bank in &self.banks {
            let w = bank.width;
            let f = bank.bias.len();
            let positions = len - w + 1;
            let mut z = vec![0.0; positions * f];
            gemm(
                positions,
                w * d,
                f,
                MatRef {
                    data: &embedded,
                    row_stride: d,
                    col_stride: 1,
                },
                MatRef {
                    data: bank.weight.data(),
                    row_stride: 1,
                    col_stride: w * d,
                },
                0.0,
                &mut z,
                f,
            );
            let mut best = z[..f].to_vec();
            let mut pos = vec![0usize; f];
            for p in 1..positions {
                let row = &z[p * f..(p + 1) * f];
                for k in 0..f {
                    if row[k] > best[k] {
                        best[k] = row[k];
                        pos[k] = p;
                    }
                }
            }
            for (b, bias) in best.iter_mut().zip(bank.bias.data()) {
                *b += bias;
            }
            features.extend(best.iter().map(|&v| relu(v)));
            pooled_pre.push(best);
            argpos.push(pos);
        }
        Ok((
            ExampleCache {
                len,
                embedded,
                pooled_pre,
                argpos,
            },
            features,
        ))
    }
}

impl Network for CnnModel {
    type Input = TokenSequence;
    type Cache = CnnCache;

    fn n_outputs(&self) -> usize {
        self.fc_bias.len()
    }

    fn forward(
        &self,
        batch: &[&TokenSequence],
        dropout_rng: Option<&mut SeededRng>,
    ) -> Result<(Tensor, CnnCache)> {
        let n_feat = self.n_features();
        let n_out = self.n_outputs();
        let mut hidden = Tensor::zeros(&[batch.len(), n_feat]);
        let mut examples = Vec::with_capacity(batch.len());
        for (b, seq) in batch.iter().enumerate() {
            let (cache, features) = self.encode(seq)?;
            hidden.row_mut(b).copy_from_slice(&features);
            examples.push(cache);
        }
        let mask = match dropout_rng {
            Some(rng) if self.dropout > 0.0 => {
                let keep = 1.0 - self.dropout;
                let mask: Vec<f64> = (0..hidden.len())
                    .map(|_| {
                        if rng.gen::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    })
                    .collect();
                for (h, m) in hidden.data_mut().iter_mut().zip(&mask) {
                    *h *= m;
                }
                Some(mask)
            }
            _ => None,
        };
        let mut out = Tensor::zeros(&[batch.len(), n_out]);
        for b in 0..batch.len() {
            out.row_mut(b).copy_from_slice(self.fc_bias.data());
        }
        gemm(
            batch.len(),
            n_feat,
            n_out,
            MatRef {
                data: hidden.data(),
                row_stride: n_feat,
                col_stride: 1,
            },
            MatRef {
                data: self.fc_weight.data(),
                row_stride: 1,
                col_stride: n_feat,
            },
            1.0,
            out.data_mut(),
            n_out,
        );
        Ok((
            out,
            CnnCache {
                examples,
                hidden,
                mask,
            },
        ))
    }

    fn backward(
        &self,
        batch: &[&TokenSequence],
        cache: &CnnCache,
        grad: &Tensor,
    ) -> Result<Vec<Tensor>> {
        let n_feat = self.n_features();
        let n_out = self.n_outputs();
        if grad.shape() != [batch.len(), n_out] {
            return Err(Error::Shape(format!("output gradient {:?}", grad.shape())));
        }
        let d = self.embed_dim;
        let mut g_embedding = Tensor::zeros(self.embedding.shape());
        let mut g_banks: Vec<(Tensor, Tensor)> = self
            .banks
            .iter()
            .map(|b| {
                (
                    Tensor::zeros(b.weight.shape()),
                    Tensor::zeros(b.bias.shape()),
                )
            })
            .collect();
        let mut g_fc_w = Tensor::zeros(self.fc_weight.shape());
        let mut g_fc_b = Tensor::zeros(self.fc_bias.shape());

        // Output layer: dW = Gᵀ·H, db = Σ G, dH = G·W.
        gemm(
            n_out,
            batch.len(),
            n_feat,
            MatRef {
                data: grad.data(),
                row_stride: 1,
                col_stride: n_out,
            },
            MatRef {
                data: cache.hidden.data(),
                row_stride: n_feat,
                col_stride: 1,
            },
            0.0,
            g_fc_w.data_mut(),
            n_feat,
        );
        for b in 0..batch.len() {
            for (acc, g) in g_fc_b.data_mut().iter_mut().zip(grad.row(b)) {
                *acc += g;
            }
        }
        let mut g_hidden = vec![0.0; batch.len() * n_feat];
        gemm(
            batch.len(),
            n_out,
            n_feat,
            MatRef {
                data: grad.data(),
                row_stride: n_out,
                col_stride: 1,
            },
            MatRef {
                data: self.fc_weight.data(),
                row_stride: n_feat,
                col_stride: 1,
            },
            0.0,
            &mut g_hidden,
            n_feat,
        );
        if let Some(mask) = &cache.mask {
            for (g, m) in g_hidden.iter_mut().zip(mask) {
                *g *= m;
            }
        }

        for (b, (seq, ex)) in batch.iter().zip(&cache.examples).enumerate() {
            let gh = &g_hidden[b * n_feat..(b + 1) * n_feat];
            let mut g_embedded = vec![0.0; ex.len * d];
            let mut offset = 0;
            for (k, bank) in self.banks.iter().enumerate() {
                let w = bank.width;
                let wd = w * d;
                let (gw, gb) = &mut g_banks[k];
                for f in 0..bank.bias.len() {
                    // Max-pooling routes the whole gradient to the winning position.
                    if ex.pooled_pre[k][f] <= 0.0 {
                        continue;
                    }
                    let g = gh[offset + f];
                    if g == 0.0 {
                        continue;
                    }
                    gb.data_mut()[f] += g;
                    let start = ex.argpos[k][f] * d;
                    let window = &ex.embedded[start..start + wd];
                    for (acc, x) in gw.row_mut(f).iter_mut().zip(window) {
                        *acc += g * x;
                    }
                    if self.trainable_embeddings {
                        let filter = bank.weight.row(f);
                        for (acc, wv) in g_embedded[start..start + wd].iter_mut().zip(filter) {
                            *acc += g * wv;
                        }
                    }
                }
                offset += bank.bias.len();
            }
            if self.trainable_embeddings {
                for (p, &id) in seq.ids[..ex.len].iter().enumerate() {
                    if id == PAD_ID {
                        continue;
                    }
                    for (acc, g) in g_embedding
                        .row_mut(id as usize)
                        .iter_mut()
                        .zip(&g_embedded[p * d..(p + 1) * d])
                    {
                        *acc += g;
                    }
                }
            }
        }

        let mut grads = Vec::with_capacity(2 * self.banks.len() + 3);
        grads.push(g_embedding);
        for (gw, gb) in g_banks {
            grads.push(gw);
            grads.push(gb);
        }
        grads.push(g_fc_w);
        grads.push(g_fc_b);
        Ok(grads)
    }

    fn params(&self) -> Vec<&Tensor> {
        let mut p = vec![&self.embedding];
        for bank in &self.banks {
            p.push(&bank.weight);
            p.push(&bank.bias);
        }
        p.push(&self.fc_weight);
        p.push(&self.fc_bias);
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut p = vec![&mut self.embedding];
        for bank in &mut self.banks {
            p.push(&mut bank.weight);
            p.push(&mut bank.bias);
        }
        p.push(&mut self.fc_weight);
        p.push(&mut self.fc_bias);
        p
    }

    fn trainable(&self) -> Vec<bool> {
        let mut t = vec![self.trainable_embeddings];
        t.extend(std::iter::repeat(true).take(2 * self.banks.len() + 2));
        t
    }

    fn is_pinned(&self, param: usize, index: usize) -> bool {
        param == 0 && index / self.embed_dim == PAD_ID as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(ids: &[u32]) -> TokenSequence {
        TokenSequence {
            ids: ids.to_vec(),
            length: ids.len(),
        }
    }

    fn tiny() -> CnnModel {
        let config = CnnConfig {
            vocab_size: 6,
            embed_dim: 2,
            filters_per_width: 1,
            widths: vec![2],
            n_classes: 2,
            dropout: 0.0,
            trainable_embeddings: true,
        };
        let mut m = CnnModel::new(&config, None, 1).unwrap();
        // Token t (≥ 2) embeds as [t, -t]; PAD is zero.
        for t in 2..6 {
            m.embedding
                .row_mut(t)
                .copy_from_slice(&[t as f64, -(t as f64)]);
        }
        m.embedding.row_mut(0).copy_from_slice(&[0.5, 0.5]);
        m.banks[0].weight = Tensor::from_vec(&[1, 4], vec![1.0, 0.0, 0.5, 1.0]).unwrap();
        m.banks[0].bias = Tensor::from_vec(&[1], vec![-1.0]).unwrap();
        m.fc_weight = Tensor::from_vec(&[2, 1], vec![2.0, -1.0]).unwrap();
        m.fc_bias = Tensor::from_vec(&[2], vec![0.1, 0.2]).unwrap();
        m
    }

    #[test]
    fn hand_executed_convolution() {
        let m = tiny();
        // Sequence [2, 5, 3, 4] (L = 4), filter · [x_p, x_{p+1}] with
        // x_t = [t, −t] and filter [1, 0, 0.5, 1]:
        //   p0: 2 + 0.5·5 − 5 = −0.5
        //   p1: 5 + 0.5·3 − 3 =  3.5
        //   p2: 3 + 0.5·4 − 4 =  1.0
        // max = 3.5, + bias −1 → 2.5, relu → 2.5.
        let (out, cache) = m.forward(&[&seq(&[2, 5, 3, 4])], None).unwrap();
        assert_eq!(cache.examples[0].argpos[0], [1]);
        assert_eq!(cache.examples[0].pooled_pre[0], [2.5]);
        assert_eq!(out.data(), [2.0 * 2.5 + 0.1, -2.5 + 0.2]);
    }

    #[test]
    fn zero_embeddings_give_the_bias() {
        let config = CnnConfig {
            vocab_size: 10,
            embed_dim: 4,
            filters_per_width: 8,
            widths: vec![3, 4, 5],
            n_classes: 3,
            dropout: 0.5,
            trainable_embeddings: true,
        };
        let mut m = CnnModel::new(&config, None, 3).unwrap();
        m.embedding.fill(0.0);
        m.fc_bias = Tensor::from_vec(&[3], vec![0.3, -0.2, 0.9]).unwrap();
        let (out, _) = m
            .forward(&[&seq(&[2, 3, 4, 5, 6, 7]), &seq(&[9; 12])], None)
            .unwrap();
        assert_eq!(out.shape(), [2, 3]);
        assert_eq!(out.row(0), [0.3, -0.2, 0.9]);
        assert_eq!(out.row(1), [0.3, -0.2, 0.9]);
    }

    #[test]
    fn output_shape_and_short_sequences() {
        let config = CnnConfig::standard(20, 3, 4);
        let m = CnnModel::new(&config, None, 5).unwrap();
        assert_eq!(m.n_features(), 1536);
        for len in [5, 6, 11, 30] {
            let ids: Vec<u32> = (0..len).map(|i| (i % 18 + 2) as u32).collect();
            let (out, _) = m.forward(&[&seq(&ids)], None).unwrap();
            assert_eq!(out.shape(), [1, 4]);
        }
        assert!(matches!(
            m.forward(&[&seq(&[2, 3, 4, 5])], None),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            m.forward(&[&seq(&[2, 3, 4, 5, 99])], None),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn trailing_padding_is_inert() {
        let config = CnnConfig {
            vocab_size: 12,
            embed_dim: 3,
            filters_per_width: 6,
            widths: vec![3, 4, 5],
            n_classes: 3,
            dropout: 0.5,
            trainable_embeddings: true,
        };
        let m = CnnModel::new(&config, None, 8).unwrap();
        let short = TokenSequence {
            ids: vec![2, 3, 4, 5, 6, 7],
            length: 6,
        };
        let mut padded = short.clone();
        padded.ids.extend([PAD_ID; 9]);
        let tiny = TokenSequence {
            ids: vec![2, 3, PAD_ID, PAD_ID, PAD_ID],
            length: 2,
        };
        let mut tiny_padded = tiny.clone();
        tiny_padded.ids.extend([PAD_ID; 4]);
        let (a, _) = m.forward(&[&short, &tiny], None).unwrap();
        let (b, _) = m.forward(&[&padded, &tiny_padded], None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dropout_only_in_training() {
        let config = CnnConfig {
            vocab_size: 12,
            embed_dim: 3,
            filters_per_width: 16,
            widths: vec![3, 4, 5],
            n_classes: 2,
            dropout: 0.5,
            trainable_embeddings: true,
        };
        let m = CnnModel::new(&config, None, 8).unwrap();
        let s = seq(&[2, 3, 4, 5, 6, 7, 8]);
        let (e1, _) = m.forward(&[&s], None).unwrap();
        let (e2, _) = m.forward(&[&s], None).unwrap();
        assert_eq!(e1, e2);
        let (t1, _) = m.forward(&[&s], Some(&mut seeded_rng(1))).unwrap();
        assert_ne!(t1, e1);
        let (t2, _) = m.forward(&[&s], Some(&mut seeded_rng(1))).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn max_pool_gradient_goes_to_the_winner() {
        let m = tiny();
        let s = seq(&[2, 5, 3, 4]);
        let (_, cache) = m.forward(&[&s], None).unwrap();
        let g = Tensor::from_vec(&[1, 2], vec![1.0, 0.0]).unwrap();
        let grads = m.backward(&[&s], &cache, &g).unwrap();
        // dL/dpooled = fc_weight[0] = 2; the winning window is [x_5, x_3].
        assert_eq!(grads[2].data(), [2.0]);
        assert_eq!(
            grads[1].data(),
            [2.0 * 5.0, -2.0 * 5.0, 2.0 * 3.0, -2.0 * 3.0]
        );
        let routed: f64 = grads[2].data().iter().sum();
        assert_eq!(routed, 2.0);
        // Tokens outside the winning window get nothing.
        assert!(grads[0].row(2).iter().all(|&v| v == 0.0));
        assert!(grads[0].row(4).iter().all(|&v| v == 0.0));
        assert_eq!(grads[0].row(5), [2.0 * 1.0, 2.0 * 0.0]);
        assert_eq!(grads[0].row(3), [2.0 * 0.5, 2.0 * 1.0]);
    }
}
