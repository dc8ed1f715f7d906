//! Decision stumps and a squared-error gradient-boosted stump ensemble.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single axis-aligned split: rows with `x[feature] >= threshold` fall on
/// the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub left_value: f64,
    pub right_value: f64,
}

impl Stump {
    pub fn output(&self, x: &[f64]) -> f64 {
        if x[self.feature] >= self.threshold {
            self.right_value
        } else {
            self.left_value
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StumpParams {
    pub rounds: usize,
    pub shrinkage: f64,
}

impl Default for StumpParams {
    fn default() -> Self {
        Self {
            rounds: 200,
            shrinkage: 0.25,
        }
    }
}

/// Gradient-boosted regression stumps: `bias + sum_i weight_i * stump_i(x)`.
/// [`StumpEnsemble::predict`] clamps the sum into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StumpEnsemble {
    pub bias: f64,
    pub stumps: Vec<(Stump, f64)>,
    dim: usize,
}

impl StumpEnsemble {
    /// Direct construction from parts (used by tests and deserialization
    /// paths that build ensembles by hand).
    pub fn from_parts(bias: f64, stumps: Vec<(Stump, f64)>, dim: usize) -> Self {
        Self { bias, stumps, dim }
    }

    /// Fits by iterating residual stump fits with the given shrinkage.
    pub fn fit(features: &[&[f64]], targets: &[f64], params: &StumpParams) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::Data("cannot fit a stump ensemble on no rows".into()));
        }
        let dim = features[0].len();
        let n = features.len();
        let bias = targets.iter().sum::<f64>() / n as f64;
        let mut current = vec![bias; n];
        let mut stumps = Vec::new();
        for _ in 0..params.rounds {
            let residuals: Vec<f64> = (0..n).map(|i| targets[i] - current[i]).collect();
            let Some(stump) = fit_residual_stump(features, &residuals) else {
                break;
            };
            for (i, row) in features.iter().enumerate() {
                current[i] += params.shrinkage * stump.output(row);
            }
            stumps.push((stump, params.shrinkage));
        }
        Ok(Self { bias, stumps, dim })
    }

    pub fn raw_sum(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Arity {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.bias
            + self
                .stumps
                .iter()
                .map(|(s, w)| w * s.output(x))
                .sum::<f64>())
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(self.raw_sum(x)?.clamp(0.0, 1.0))
    }

    /// Weighted per-stump outputs; the internal representation exposed to
    /// representation-aware views.
    pub fn contributions(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Arity {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.stumps.iter().map(|(s, w)| w * s.output(x)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Least-squares stump for the residuals: leaf values are residual means.
/// Scanned in (feature, threshold) order for deterministic ties; `None` if
/// every feature is constant.
#[allow(clippy::needless_range_loop)] // `feature` indexes the inner row axis
fn fit_residual_stump(features: &[&[f64]], residuals: &[f64]) -> Option<Stump> {
    let n = features.len();
    let dim = features[0].len();
    let total: f64 = residuals.iter().sum();
    let mut best: Option<(f64, Stump)> = None;
    for feature in 0..dim {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| features[a][feature].total_cmp(&features[b][feature]));
        let mut left_sum = 0.0;
        for k in 0..n - 1 {
            left_sum += residuals[order[k]];
            let (xa, xb) = (features[order[k]][feature], features[order[k + 1]][feature]);
            if xa == xb {
                continue;
            }
            let n_left = (k + 1) as f64;
            let n_right = (n - k - 1) as f64;
            let right_sum = total - left_sum;
            let score = left_sum * left_sum / n_left + right_sum * right_sum / n_right;
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((
                    score,
                    Stump {
                        feature,
                        threshold: 0.5 * (xa + xb),
                        left_value: left_sum / n_left,
                        right_value: right_sum / n_right,
                    },
                ));
            }
        }
    }
    best.map(|(_, s)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamps_raw_sums_into_unit_interval() {
        // Hand-built ensemble whose raw sum is 1.3 on the right branch.
        let ens = StumpEnsemble::from_parts(
            0.3,
            vec![(
                Stump {
                    feature: 0,
                    threshold: 0.0,
                    left_value: 0.0,
                    right_value: 1.0,
                },
                1.0,
            )],
            1,
        );
        assert!((ens.raw_sum(&[1.0]).unwrap() - 1.3).abs() < 1e-15);
        assert_eq!(ens.predict(&[1.0]).unwrap(), 1.0);
        assert!((ens.predict(&[-1.0]).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn fits_a_step_function() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 40.0]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let targets: Vec<f64> = rows
            .iter()
            .map(|r| if r[0] >= 0.5 { 0.9 } else { 0.1 })
            .collect();
        let ens = StumpEnsemble::fit(&refs, &targets, &StumpParams::default()).unwrap();
        assert!((ens.predict(&[0.2]).unwrap() - 0.1).abs() < 0.02);
        assert!((ens.predict(&[0.8]).unwrap() - 0.9).abs() < 0.02);
    }

    #[test]
    fn contributions_have_one_entry_per_stump() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let targets: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let ens = StumpEnsemble::fit(
            &refs,
            &targets,
            &StumpParams {
                rounds: 7,
                shrinkage: 0.5,
            },
        )
        .unwrap();
        let c = ens.contributions(&[3.0, 1.0]).unwrap();
        assert_eq!(c.len(), ens.stumps.len());
    }
}
