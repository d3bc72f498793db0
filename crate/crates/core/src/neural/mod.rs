//! Dense tensors with hand-derived reverse-mode gradients for the two
//! network families: a convolutional sentence classifier and a multilayer
//! perceptron over bag-of-words vectors. Training uses shuffled minibatches
//! and Adam.

mod adam;
mod cnn;
mod gradcheck;
mod loss;
mod mlp;
mod ops;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use cnn::{CnnCache, CnnConfig, CnnModel, ConvBank};
pub use gradcheck::{grad_check, GradCheckModel, GradCheckReport};
pub use loss::{loss, LossKind};
pub use mlp::{DenseLayer, MlpCache, MlpModel};
pub use ops::{
    log_softmax, relu, relu_grad, sigmoid, softmax, softplus, standard_normal, xavier_init,
    xavier_uniform,
};
pub use tensor::Tensor;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{seeded_rng, SeededRng};

/// A network trainable by [`fit`]: parameters are exposed as an ordered
/// list of tensors and `backward` returns gradients in the same order.
pub trait Network {
    type Input;
    type Cache;

    fn n_outputs(&self) -> usize;

    /// Linear output activations (`batch × outputs`). Dropout is applied
    /// only when a generator is supplied.
    fn forward(
        &self,
        batch: &[&Self::Input],
        dropout_rng: Option<&mut SeededRng>,
    ) -> Result<(Tensor, Self::Cache)>;

    fn backward(
        &self,
        batch: &[&Self::Input],
        cache: &Self::Cache,
        grad: &Tensor,
    ) -> Result<Vec<Tensor>>;

    fn params(&self) -> Vec<&Tensor>;

    fn params_mut(&mut self) -> Vec<&mut Tensor>;

    fn trainable(&self) -> Vec<bool>;

    /// Entries held fixed regardless of gradients (the PAD embedding row).
    fn is_pinned(&self, _param: usize, _index: usize) -> bool {
        false
    }
}

/// Hyperparameters shared by the CNN and MLP families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralParams {
    pub embed_dim: usize,
    pub filters_per_width: usize,
    pub widths: Vec<usize>,
    pub dropout: f64,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_len: usize,
    pub trainable_embeddings: bool,
    pub multilabel_cnn_loss: LossKind,
    pub multilabel_mlp_loss: LossKind,
}

impl Default for NeuralParams {
    fn default() -> Self {
        NeuralParams {
            embed_dim: 300,
            filters_per_width: 512,
            widths: vec![3, 4, 5],
            dropout: 0.5,
            hidden: vec![512],
            epochs: 20,
            batch_size: 32,
            learning_rate: 1e-3,
            max_len: 1000,
            trainable_embeddings: true,
            multilabel_cnn_loss: LossKind::BceSigmoid,
            multilabel_mlp_loss: LossKind::MseSigmoid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub loss: LossKind,
}

/// Minibatch training; returns the mean training loss of every epoch.
/// Shuffling and dropout draw from generators derived from `seed`.
pub fn fit<N: Network>(
    model: &mut N,
    inputs: &[N::Input],
    targets: &[Vec<f64>],
    config: &TrainConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    if inputs.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} inputs vs {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    if inputs.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::param(
            "training",
            "epochs and batch size must be positive",
        ));
    }
    if !(config.adam.learning_rate > 0.0) {
        return Err(Error::param(
            "learning_rate",
            format!("must be positive, got {}", config.adam.learning_rate),
        ));
    }
    let n_out = model.n_outputs();
    if let Some(t) = targets.iter().find(|t| t.len() != n_out) {
        return Err(Error::Shape(format!(
            "target of width {} for {n_out} outputs",
            t.len()
        )));
    }
    let mut shuffle_rng = seeded_rng(seed);
    let mut dropout_rng = seeded_rng(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut adam = AdamState::new(config.adam, &model.params());
    let trainable = model.trainable();
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&N::Input> = chunk.iter().map(|&i| &inputs[i]).collect();
            let mut target = Tensor::zeros(&[chunk.len(), n_out]);
            for (r, &i) in chunk.iter().enumerate() {
                target.row_mut(r).copy_from_slice(&targets[i]);
            }
            let (out, cache) = model.forward(&batch, Some(&mut dropout_rng))?;
            let (l, grad) = loss(config.loss, &out, &target)?;
            if !l.is_finite() {
                return Err(Error::Divergence {
                    epoch: epoch + 1,
                    loss: l,
                });
            }
            total += l * chunk.len() as f64;
            let grads = model.backward(&batch, &cache, &grad)?;
            adam.step(&mut model.params_mut(), &grads, &trainable)?;
        }
        let mean = total / inputs.len() as f64;
        if !mean.is_finite() || model.params().iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence {
                epoch: epoch + 1,
                loss: mean,
            });
        }
        log::debug!("epoch {}: loss {mean:.6}", epoch + 1);
        trace.push(mean);
    }
    Ok(trace)
}

/// Eval-mode output activations, computed in batches.
pub fn predict_activations<N: Network>(
    model: &N,
    inputs: &[N::Input],
    batch_size: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(batch_size.max(1)) {
        let batch: Vec<&N::Input> = chunk.iter().collect();
        let (acts, _) = model.forward(&batch, None)?;
        for r in 0..chunk.len() {
            out.push(acts.row(r).to_vec());
        }
    }
    Ok(out)
}
