//! Logistic regression by full-batch gradient descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub iterations: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            iterations: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LogisticModel {
    /// Full-batch gradient descent on the mean logistic loss, initialized at
    /// zero. Deterministic given (params, data).
    pub fn fit(features: &[&[f64]], labels: &[u8], params: &LogisticParams) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Data("cannot fit logistic model on no rows".into()));
        }
        let n = features.len();
        let d = features[0].len();
        let mut weights = vec![0.0; d];
        let mut bias = 0.0;
        for _ in 0..params.iterations {
            let mut grad_w = vec![0.0; d];
            let mut grad_b = 0.0;
            for (row, &y) in features.iter().zip(labels) {
                let err = sigmoid(self_margin(&weights, bias, row)) - f64::from(y);
                for (g, x) in grad_w.iter_mut().zip(row.iter()) {
                    *g += err * x;
                }
                grad_b += err;
            }
            let scale = params.learning_rate / n as f64;
            for (w, g) in weights.iter_mut().zip(&grad_w) {
                *w -= scale * g;
            }
            bias -= scale * grad_b;
        }
        Ok(Self { weights, bias })
    }

    pub fn margin(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::Arity {
                expected: self.weights.len(),
                got: x.len(),
            });
        }
        Ok(self_margin(&self.weights, self.bias, x))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.margin(x)?))
    }
}

fn self_margin(weights: &[f64], bias: f64, x: &[f64]) -> f64 {
    bias + weights.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
}
