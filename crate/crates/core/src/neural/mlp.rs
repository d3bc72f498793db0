//! Feed-forward network over sparse bag-of-words vectors with rectifier
//! hidden layers.

use serde::{Deserialize, Serialize};

use super::ops::{relu, relu_grad, xavier_uniform};
use super::tensor::Tensor;
use super::Network;
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::{seeded_rng, SeededRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `inputs × outputs`, so row j holds input j's outgoing weights.
    pub weight: Tensor,
    pub bias: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
}

pub struct MlpCache {
    /// Pre-activations of every layer, one `batch × width` tensor each.
    pre: Vec<Tensor>,
}

impl MlpModel {
    /// `sizes` = [inputs, hidden…, outputs]; at least one hidden layer.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 3 {
            return Err(Error::param(
                "layers",
                "need an input, at least one hidden and an output size",
            ));
        }
        let mut rng = seeded_rng(seed);
        let layers = sizes
            .windows(2)
            .map(|w| {
                Ok(DenseLayer {
                    weight: xavier_uniform(&[w[0], w[1]], w[0], w[1], &mut rng)?,
                    bias: Tensor::zeros(&[w[1]]),
                })
            })
            .collect::<Result<_>>()?;
        Ok(MlpModel { layers })
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].weight.shape()[0]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.n_inputs()];
        s.extend(self.layers.iter().map(|l| l.bias.len()));
        s
    }
}

impl Network for MlpModel {
    type Input = SparseVector;
    type Cache = MlpCache;

    fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.bias.len())
    }

    fn forward(
        &self,
        batch: &[&SparseVector],
        _dropout: Option<&mut SeededRng>,
    ) -> Result<(Tensor, MlpCache)> {
        let first = &self.layers[0];
        let width = first.bias.len();
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut z = Tensor::zeros(&[batch.len(), width]);
        for (b, x) in batch.iter().enumerate() {
            if x.dim_bound() > self.n_inputs() {
                return Err(Error::Shape(format!(
                    "feature id {} outside {} inputs",
                    x.dim_bound() - 1,
                    self.n_inputs()
                )));
            }
            let row = z.row_mut(b);
            row.copy_from_slice(first.bias.data());
            for (j, v) in x.iter() {
                for (acc, w) in row.iter_mut().zip(first.weight.row(j as usize)) {
                    *acc += v * w;
                }
            }
        }
        pre.push(z);
        for layer in &self.layers[1..] {
            let prev = pre.last().expect("first layer computed");
            let (n_in, n_out) = (layer.weight.shape()[0], layer.weight.shape()[1]);
            let mut z = Tensor::zeros(&[batch.len(), n_out]);
            for b in 0..batch.len() {
                let row = z.row_mut(b);
                row.copy_from_slice(layer.bias.data());
                for (i, &h) in prev.row(b).iter().enumerate().take(n_in) {
                    let a = relu(h);
                    if a == 0.0 {
                        continue;
                    }
                    for (acc, w) in row.iter_mut().zip(layer.weight.row(i)) {
                        *acc += a * w;
                    }
                }
            }
            pre.push(z);
        }
        let out = pre.last().expect("at least one layer").clone();
        Ok((out, MlpCache { pre }))
    }

    fn backward(
        &self,
        batch: &[&SparseVector],
        cache: &MlpCache,
        grad: &Tensor,
    ) -> Result<Vec<Tensor>> {
        if grad.shape() != [batch.len(), self.n_outputs()] {
            return Err(Error::Shape(format!("output gradient {:?}", grad.shape())));
        }
        let mut grads: Vec<(Tensor, Tensor)> = self
            .layers
            .iter()
            .map(|l| {
                (
                    Tensor::zeros(l.weight.shape()),
                    Tensor::zeros(l.bias.shape()),
                )
            })
            .collect();
        let mut delta = grad.clone();
        for k in (0..self.layers.len()).rev() {
            let (gw, gb) = &mut grads[k];
            for b in 0..batch.len() {
                for (acc, d) in gb.data_mut().iter_mut().zip(delta.row(b)) {
                    *acc += d;
                }
            }
            if k == 0 {
                for (b, x) in batch.iter().enumerate() {
                    let d = delta.row(b);
                    for (j, v) in x.iter() {
                        for (acc, dv) in gw.row_mut(j as usize).iter_mut().zip(d) {
                            *acc += v * dv;
                        }
                    }
                }
                break;
            }
            let prev = &cache.pre[k - 1];
            let layer = &self.layers[k];
            let n_in = layer.weight.shape()[0];
            let mut next = Tensor::zeros(&[batch.len(), n_in]);
            for b in 0..batch.len() {
                let d = delta.row(b);
                for i in 0..n_in {
                    let h = prev.row(b)[i];
                    let a = relu(h);
                    if a != 0.0 {
                        for (acc, dv) in gw.row_mut(i).iter_mut().zip(d) {
                            *acc += a * dv;
                        }
                    }
                    let back: f64 = layer
                        .weight
                        .row(i)
                        .iter()
                        .zip(d)
                        .map(|(w, dv)| w * dv)
                        .sum();
                    next.row_mut(b)[i] = back * relu_grad(h);
                }
            }
            delta = next;
        }
        Ok(grads.into_iter().flat_map(|(w, b)| [w, b]).collect())
    }

    fn params(&self) -> Vec<&Tensor> {
        self.layers
            .iter()
            .flat_map(|l| [&l.weight, &l.bias])
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.weight, &mut l.bias])
            .collect()
    }

    fn trainable(&self) -> Vec<bool> {
        vec![true; 2 * self.layers.len()]
    }
}
