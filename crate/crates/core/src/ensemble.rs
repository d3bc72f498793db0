//! Combining independently seeded networks: majority voting for multiclass
//! predictions and summed linear activations for multilabel ones.

use serde::{Deserialize, Serialize};

use crate::decode::{argmax, threshold_decode};
use crate::error::{Error, Result};
use crate::neural::sigmoid;

pub const DEFAULT_MEMBERS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleScheme {
    MajorityVote,
    SumActivation,
}

/// Modal class; ties go to the lowest class index.
pub fn majority_vote(predictions: &[usize]) -> Result<usize> {
    let Some(&max) = predictions.iter().max() else {
        return Err(Error::Empty("member predictions"));
    };
    let mut counts = vec![0usize; max + 1];
    for &p in predictions {
        counts[p] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    Ok(counts.iter().position(|&c| c == best).unwrap_or(0))
}

/// Elementwise sum of the members' activation vectors.
pub fn sum_activations(members: &[Vec<f64>]) -> Result<Vec<f64>> {
    let Some(first) = members.first() else {
        return Err(Error::Empty("member activations"));
    };
    let mut sum = vec![0.0; first.len()];
    for m in members {
        if m.len() != sum.len() {
            return Err(Error::Shape(format!(
                "member activations of width {} and {}",
                sum.len(),
                m.len()
            )));
        }
        for (s, v) in sum.iter_mut().zip(m) {
            *s += v;
        }
    }
    Ok(sum)
}

/// Labels whose summed activation is positive (σ(sum) > 0.5), or the argmax
/// label when none is.
pub fn sum_activation_decode(members: &[Vec<f64>]) -> Result<Vec<usize>> {
    Ok(threshold_decode(&sum_activations(members)?, 0.0))
}

/// The same decode evaluated through the sigmoid.
pub fn sigmoid_activation_decode(members: &[Vec<f64>]) -> Result<Vec<usize>> {
    let sum = sum_activations(members)?;
    let fired: Vec<usize> = (0..sum.len()).filter(|&c| sigmoid(sum[c]) > 0.5).collect();
    if fired.is_empty() {
        Ok(vec![argmax(&sum)])
    } else {
        Ok(fired)
    }
}
