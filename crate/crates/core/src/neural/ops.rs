//! Activations and weight initializers.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::{seeded_rng, SeededRng};

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// Subgradient of the rectifier, 0 at the kink.
pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Logistic function evaluated without overflow for any finite input.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + eˣ) without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn log_softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.iter().map(|v| v - lse).collect()
}

pub fn softmax(row: &[f64]) -> Vec<f64> {
    log_softmax(row).into_iter().map(f64::exp).collect()
}

/// Samples U(−b, b) with b = √(6 / (fan_in + fan_out)).
pub fn xavier_uniform(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut SeededRng,
) -> Result<Tensor> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::param(
            "fan",
            format!("fan_in {fan_in} and fan_out {fan_out} must be positive"),
        ));
    }
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::from_vec(shape, data)
}

/// Xavier-uniform `(fan_in, fan_out)` matrix from its own seed.
pub fn xavier_init(shape: [usize; 2], seed: u64) -> Result<Tensor> {
    xavier_uniform(&shape, shape[0], shape[1], &mut seeded_rng(seed))
}

pub fn standard_normal(shape: &[usize], rng: &mut SeededRng) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    Tensor::from_vec(shape, data).expect("normal samples are finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_values() {
        assert_eq!(relu(-2.0), 0.0);
        assert_eq!(relu(3.0), 3.0);
        assert_eq!(relu_grad(2.0), 1.0);
        assert_eq!(relu_grad(-2.0), 0.0);
        assert_eq!(relu_grad(0.0), 0.0);
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        for x in [-30.0, -2.5, -1e-3, 0.7, 4.0, 25.0] {
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-12);
        }
        let big = sigmoid(1000.0);
        assert!(big.is_finite() && big <= 1.0);
        let small = sigmoid(-1000.0);
        assert!(small.is_finite() && small >= 0.0);
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-9);
        assert!(softplus(-1000.0) >= 0.0);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1000.0, -3.0, 2.0, 999.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn xavier_bounds_and_variance() {
        let (fan_in, fan_out) = (300usize, 200usize);
        let t = xavier_uniform(&[100_000], fan_in, fan_out, &mut seeded_rng(4)).unwrap();
        let bound = (6.0 / 500.0f64).sqrt();
        assert!(t.data().iter().all(|v| v.abs() <= bound));
        let n = t.len() as f64;
        let mean = t.data().iter().sum::<f64>() / n;
        let var = t.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let expected = 2.0 / (fan_in + fan_out) as f64;
        assert!(
            (var - expected).abs() / expected < 0.1,
            "variance {var} vs {expected}"
        );
        assert_eq!(
            xavier_init([3, 4], 9).unwrap(),
            xavier_init([3, 4], 9).unwrap()
        );
        assert!(xavier_init([0, 4], 9).is_err());
    }
}
