//! Central finite-difference verification of the analytic gradients.

use rand::Rng;

use super::cnn::{CnnConfig, CnnModel};
use super::loss::{loss, LossKind};
use super::mlp::MlpModel;
use super::tensor::Tensor;
use super::Network;
use crate::error::Result;
use crate::features::{SparseVector, TokenSequence};
use crate::{seeded_rng, SeededRng};

const STEP: f64 = 1e-5;
/// Denominator floor so gradients that are zero up to rounding do not
/// produce spurious relative errors.
const FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradCheckModel {
    Cnn {
        loss: LossKind,
        trainable_embeddings: bool,
    },
    Mlp {
        loss: LossKind,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Number of parameter entries compared.
    pub checked: usize,
    /// Largest analytic gradient magnitude on frozen parameters.
    pub max_frozen_gradient: f64,
}

fn random_targets(rng: &mut SeededRng, kind: LossKind, batch: usize, classes: usize) -> Tensor {
    let mut t = Tensor::zeros(&[batch, classes]);
    for b in 0..batch {
        match kind {
            LossKind::CrossEntropySoftmax => t.row_mut(b)[rng.gen_range(0..classes)] = 1.0,
            _ => t
                .row_mut(b)
                .iter_mut()
                .for_each(|v| *v = f64::from(u8::from(rng.gen_bool(0.5)))),
        }
    }
    t
}

fn total_loss<N: Network>(
    model: &N,
    batch: &[&N::Input],
    kind: LossKind,
    targets: &Tensor,
) -> Result<f64> {
    let (out, _) = model.forward(batch, None)?;
    Ok(loss(kind, &out, targets)?.0)
}

fn check<N: Network>(
    model: &mut N,
    inputs: &[N::Input],
    kind: LossKind,
    targets: &Tensor,
) -> Result<GradCheckReport> {
    let batch: Vec<&N::Input> = inputs.iter().collect();
    let (out, cache) = model.forward(&batch, None)?;
    let (_, g_out) = loss(kind, &out, targets)?;
    let grads = model.backward(&batch, &cache, &g_out)?;
    let trainable = model.trainable();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        max_frozen_gradient: 0.0,
    };
    for (p, grad) in grads.iter().enumerate() {
        if !trainable[p] {
            let m = grad.data().iter().fold(0.0f64, |a, g| a.max(g.abs()));
            report.max_frozen_gradient = report.max_frozen_gradient.max(m);
            continue;
        }
        for i in 0..grad.len() {
            if model.is_pinned(p, i) {
                continue;
            }
            let original = model.params()[p].data()[i];
            model.params_mut()[p].data_mut()[i] = original + STEP;
            let plus = total_loss(model, &batch, kind, targets)?;
            model.params_mut()[p].data_mut()[i] = original - STEP;
            let minus = total_loss(model, &batch, kind, targets)?;
            model.params_mut()[p].data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * STEP);
            let analytic = grad.data()[i];
            let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(FLOOR);
            report.max_relative_error = report.max_relative_error.max(rel);
            report.checked += 1;
        }
    }
    Ok(report)
}

/// Builds a tiny random network and batch from `seed` and compares every
/// analytic gradient entry with a central difference (h = 1e-5).
pub fn grad_check(model: GradCheckModel, seed: u64) -> Result<GradCheckReport> {
    let mut rng = seeded_rng(seed);
    let classes = rng.gen_range(2..=4);
    let batch = 3;
    match model {
        GradCheckModel::Cnn {
            loss: kind,
            trainable_embeddings,
        } => {
            let config = CnnConfig {
                vocab_size: rng.gen_range(12..=30),
                embed_dim: rng.gen_range(2..=8),
                filters_per_width: rng.gen_range(1..=4),
                widths: vec![3, 4, 5],
                n_classes: classes,
                dropout: 0.5,
                trainable_embeddings,
            };
            let mut net = CnnModel::new(&config, None, rng.gen())?;
            // Non-zero biases so the rectifier is exercised on both sides.
            for bank in &mut net.banks {
                bank.bias
                    .data_mut()
                    .iter_mut()
                    .for_each(|b| *b = rng.gen_range(-0.5..0.5));
            }
            let inputs: Vec<TokenSequence> = (0..batch)
                .map(|_| {
                    let len = rng.gen_range(5..=12);
                    TokenSequence {
                        ids: (0..len)
                            .map(|_| rng.gen_range(0..config.vocab_size as u32))
                            .collect(),
                        length: len,
                    }
                })
                .collect();
            let targets = random_targets(&mut rng, kind, batch, classes);
            check(&mut net, &inputs, kind, &targets)
        }
        GradCheckModel::Mlp { loss: kind } => {
            let n_in = rng.gen_range(6..=15);
            let hidden = rng.gen_range(3..=6);
            let mut net = MlpModel::new(&[n_in, hidden, classes], rng.gen())?;
            for layer in &mut net.layers {
                layer
                    .bias
                    .data_mut()
                    .iter_mut()
                    .for_each(|b| *b = rng.gen_range(-0.3..0.3));
            }
            let inputs: Vec<SparseVector> = (0..batch)
                .map(|_| {
                    let mut pairs = Vec::new();
                    for j in 0..n_in as u32 {
                        if rng.gen_bool(0.5) {
                            pairs.push((j, rng.gen_range(0.5..3.0)));
                        }
                    }
                    SparseVector::from_pairs(pairs)
                })
                .collect();
            let targets = random_targets(&mut rng, kind, batch, classes);
            check(&mut net, &inputs, kind, &targets)
        }
    }
}
