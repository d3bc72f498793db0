use serde::{Deserialize, Serialize};

use super::ops::{log_softmax, sigmoid, softplus};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Softmax followed by cross-entropy against one-hot targets.
    CrossEntropySoftmax,
    /// Elementwise binary cross-entropy on sigmoid outputs.
    BceSigmoid,
    /// Squared error between sigmoid outputs and 0/1 targets.
    MseSigmoid,
}

/// Mean-over-batch loss (summed over classes) and its gradient with respect
/// to the activations. Both tensors are `batch × classes`.
pub fn loss(kind: LossKind, activations: &Tensor, targets: &Tensor) -> Result<(f64, Tensor)> {
    if !activations.same_shape(targets) || activations.shape().len() != 2 {
        return Err(Error::Shape(format!(
            "activations {:?} vs targets {:?}",
            activations.shape(),
            targets.shape()
        )));
    }
    let batch = activations.shape()[0];
    if batch == 0 {
        return Err(Error::Empty("batch"));
    }
    let scale = 1.0 / batch as f64;
    let mut grad = Tensor::zeros(activations.shape());
    let mut total = 0.0;
    for b in 0..batch {
        let a = activations.row(b);
        let t = targets.row(b);
        let g = grad.row_mut(b);
        match kind {
            LossKind::CrossEntropySoftmax => {
                let logp = log_softmax(a);
                let t_sum: f64 = t.iter().sum();
                for c in 0..a.len() {
                    total -= t[c] * logp[c];
                    g[c] = scale * (logp[c].exp() * t_sum - t[c]);
                }
            }
            LossKind::BceSigmoid => {
                for c in 0..a.len() {
                    total += softplus(a[c]) - t[c] * a[c];
                    g[c] = scale * (sigmoid(a[c]) - t[c]);
                }
            }
            LossKind::MseSigmoid => {
                for c in 0..a.len() {
                    let s = sigmoid(a[c]);
                    total += (s - t[c]).powi(2);
                    g[c] = scale * 2.0 * (s - t[c]) * s * (1.0 - s);
                }
            }
        }
    }
    Ok((total * scale, grad))
}
