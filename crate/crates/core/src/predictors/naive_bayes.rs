//! Gaussian naive Bayes with a variance floor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const VAR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    /// log P(y = 1) and log P(y = 0); `None` when the class is absent.
    log_prior_pos: Option<f64>,
    log_prior_neg: Option<f64>,
    /// Per-feature (mean, variance) for the positive class.
    pos_stats: Vec<(f64, f64)>,
    neg_stats: Vec<(f64, f64)>,
}

impl NaiveBayesModel {
    pub fn fit(features: &[&[f64]], labels: &[u8]) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Data("cannot fit naive Bayes on no rows".into()));
        }
        let d = features[0].len();
        let n = features.len();
        let n_pos = labels.iter().filter(|&&y| y == 1).count();
        let n_neg = n - n_pos;
        let stats = |cls: u8, count: usize| -> Vec<(f64, f64)> {
            if count == 0 {
                return vec![(0.0, VAR_FLOOR); d];
            }
            (0..d)
                .map(|j| {
                    let vals: Vec<f64> = features
                        .iter()
                        .zip(labels)
                        .filter(|(_, &y)| y == cls)
                        .map(|(row, _)| row[j])
                        .collect();
                    let mean = vals.iter().sum::<f64>() / count as f64;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
                        / count as f64;
                    (mean, var.max(VAR_FLOOR))
                })
                .collect()
        };
        Ok(Self {
            log_prior_pos: (n_pos > 0).then(|| (n_pos as f64 / n as f64).ln()),
            log_prior_neg: (n_neg > 0).then(|| (n_neg as f64 / n as f64).ln()),
            pos_stats: stats(1, n_pos),
            neg_stats: stats(0, n_neg),
        })
    }

    pub fn dim(&self) -> usize {
        self.pos_stats.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Arity {
                expected: self.dim(),
                got: x.len(),
            });
        }
        match (self.log_prior_pos, self.log_prior_neg) {
            (None, _) => Ok(0.0),
            (_, None) => Ok(1.0),
            (Some(lp), Some(ln_)) => {
                let score = |stats: &[(f64, f64)], prior: f64| -> f64 {
                    prior
                        + stats
                            .iter()
                            .zip(x)
                            .map(|(&(m, v), &xi)| {
                                -0.5 * ((xi - m) * (xi - m) / v + v.ln())
                            })
                            .sum::<f64>()
                };
                let sp = score(&self.pos_stats, lp);
                let sn = score(&self.neg_stats, ln_);
                // P(y=1|x) = 1 / (1 + exp(sn - sp)), computed stably.
                Ok(1.0 / (1.0 + (sn - sp).exp()))
            }
        }
    }
}
