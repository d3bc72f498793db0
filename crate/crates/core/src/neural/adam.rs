use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, params: &[&Tensor]) -> Self {
        AdamState {
            config,
            step: 0,
            first: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            second: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    /// One bias-corrected update. Parameters whose `trainable` flag is false
    /// are left untouched.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor],
        grads: &[Tensor],
        trainable: &[bool],
    ) -> Result<()> {
        if params.len() != self.first.len()
            || grads.len() != params.len()
            || trainable.len() != params.len()
        {
            return Err(Error::Shape(format!(
                "{} parameters, {} gradients, {} moment buffers",
                params.len(),
                grads.len(),
                self.first.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if !p.same_shape(g) || p.len() != self.first[i].len() {
                return Err(Error::Shape(format!(
                    "parameter {i}: {:?} vs gradient {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            if !trainable[i] {
                continue;
            }
            let m = &mut self.first[i];
            let v = &mut self.second[i];
            for (j, (w, &gj)) in p.data_mut().iter_mut().zip(g.data()).enumerate() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
                v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
                let m_hat = m[j] / c1;
                let v_hat = v[j] / c2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

pub fn adam_step(
    state: &mut AdamState,
    params: &mut [&mut Tensor],
    grads: &[Tensor],
) -> Result<()> {
    let trainable = vec![true; params.len()];
    state.step(params, grads, &trainable)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> Tensor {
        Tensor::from_vec(&[1], vec![v]).unwrap()
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut p = Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap();
        let before = p.clone();
        let mut state = AdamState::new(AdamConfig::default(), &[&p]);
        adam_step(&mut state, &mut [&mut p], &[Tensor::zeros(&[3])]).unwrap();
        assert_eq!(p, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn first_step_by_hand() {
        let config = AdamConfig {
            learning_rate: 0.1,
            ..AdamConfig::default()
        };
        let mut p = scalar(0.0);
        let mut state = AdamState::new(config, &[&p]);
        adam_step(&mut state, &mut [&mut p], &[scalar(1.0)]).unwrap();
        // m = 0.1, v = 0.001; m̂ = 1, v̂ = 1 → Δ = −0.1 / (1 + 1e-8).
        assert!((p.data()[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let run = || {
            let mut p = Tensor::from_vec(&[2], vec![1.0, 1.0]).unwrap();
            let mut state = AdamState::new(AdamConfig::default(), &[&p]);
            for k in 0..50 {
                let g = Tensor::from_vec(&[2], vec![p.data()[0] * 2.0, (k as f64).sin()]).unwrap();
                adam_step(&mut state, &mut [&mut p], &[g]).unwrap();
            }
            p
        };
        assert_eq!(run().data(), run().data());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = scalar(0.0);
        let mut state = AdamState::new(AdamConfig::default(), &[&p]);
        assert!(adam_step(&mut state, &mut [&mut p], &[Tensor::zeros(&[2])]).is_err());
    }
}
