//! Loss predictors: the self-entropy baseline, trained regressors over
//! feature views, the advantage functional, and the constructive
//! conversions between good loss predictors and multicalibration witnesses.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::ProperLoss;
use crate::multicalibration::TestFunction;
use crate::predictors::{
    feature_views, FeatureView, Predictor, RegressionTree, StumpEnsemble, StumpParams, TreeParams,
    ViewLevel,
};

/// The regressor behind a loss predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpModel {
    /// `H(p(x))`: the model's own loss estimate.
    SelfEntropy,
    Constant { value: f64 },
    /// Linear model over the flattened view coordinates.
    Ridge { weights: Vec<f64>, bias: f64 },
    Tree(RegressionTree),
    StumpRegressor(StumpEnsemble),
    /// `clamp(H(p(x)) + beta * delta(phi))`: the witness-to-predictor form.
    Shifted { beta: f64, delta: Box<TestFunction> },
    /// `clamp((1 - beta) * H(p(x)) + beta * f(phi))` for `beta` in `[-1, 1]`;
    /// the augmented class that upper-bounds the sandwich inequality.
    Mix { beta: f64, f: Box<LossPredictor> },
}

/// A loss predictor for a fixed proper loss, reading views at a fixed level.
/// Outputs are clamped into `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossPredictor {
    pub level: ViewLevel,
    pub loss: ProperLoss,
    pub model: LpModel,
}

impl LossPredictor {
    pub fn self_entropy(loss: ProperLoss) -> Self {
        Self {
            level: ViewLevel::PredictionOnly,
            loss,
            model: LpModel::SelfEntropy,
        }
    }

    pub fn constant(loss: ProperLoss, value: f64) -> Self {
        Self {
            level: ViewLevel::PredictionOnly,
            loss,
            model: LpModel::Constant { value },
        }
    }

    /// Evaluates the loss prediction on a view.
    pub fn predict(&self, view: &FeatureView) -> Result<f64> {
        let raw = match &self.model {
            LpModel::SelfEntropy => self.loss.entropy(view.prediction),
            LpModel::Constant { value } => *value,
            LpModel::Ridge { weights, bias } => {
                let coords = view.coords();
                if coords.len() != weights.len() {
                    return Err(Error::Arity {
                        expected: weights.len(),
                        got: coords.len(),
                    });
                }
                bias + weights.iter().zip(&coords).map(|(w, c)| w * c).sum::<f64>()
            }
            LpModel::Tree(tree) => tree.predict(&view.coords())?,
            LpModel::StumpRegressor(ens) => ens.raw_sum(&view.coords())?,
            LpModel::Shifted { beta, delta } => {
                self.loss.entropy(view.prediction) + beta * delta.eval_view(view)?
            }
            LpModel::Mix { beta, f } => {
                (1.0 - beta) * self.loss.entropy(view.prediction) + beta * f.predict(view)?
            }
        };
        Ok(raw.clamp(0.0, 1.0))
    }

    pub fn algorithm(&self) -> &'static str {
        match &self.model {
            LpModel::SelfEntropy => "self-entropy",
            LpModel::Constant { .. } => "constant",
            LpModel::Ridge { .. } => "ridge",
            LpModel::Tree(_) => "tree",
            LpModel::StumpRegressor(_) => "stump-ensemble",
            LpModel::Shifted { .. } => "shifted",
            LpModel::Mix { .. } => "mix",
        }
    }
}

/// The self-entropy prediction `H(v)` for a single prediction value.
pub fn self_entropy(loss: &ProperLoss, v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("v={v} outside [0, 1]")));
    }
    Ok(loss.entropy(v))
}

/// Training algorithm for [`train_loss_predictor`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpAlgo {
    Ridge { lambda: f64 },
    StumpEnsemble(StumpParams),
    Tree(TreeParams),
    /// Least-squares constant: the empirical mean realized loss.
    Constant,
}

impl LpAlgo {
    pub fn name(&self) -> &'static str {
        match self {
            LpAlgo::Ridge { .. } => "ridge",
            LpAlgo::StumpEnsemble(_) => "stump-ensemble",
            LpAlgo::Tree(_) => "tree",
            LpAlgo::Constant => "constant",
        }
    }
}

/// Realized losses `loss(y_i, p(x_i))` for every row.
pub fn realized_losses(loss: &ProperLoss, p: &Predictor, data: &Dataset) -> Result<Vec<f64>> {
    (0..data.len())
        .map(|i| loss.eval(data.label(i), p.predict(data.row(i))?))
        .collect()
}

/// Fits a regressor of the feature view against realized losses
/// `loss(y, p(x))`. All algorithms are deterministic, so no seed is
/// consumed.
pub fn train_loss_predictor(
    algo: &LpAlgo,
    loss: &ProperLoss,
    p: &Predictor,
    level: ViewLevel,
    data: &Dataset,
) -> Result<LossPredictor> {
    if data.is_empty() {
        return Err(Error::Data("cannot train a loss predictor on no rows".into()));
    }
    let views = feature_views(level, p, data)?;
    let targets = realized_losses(loss, p, data)?;
    let matrix: Vec<Vec<f64>> = views.iter().map(FeatureView::coords).collect();
    let rows: Vec<&[f64]> = matrix.iter().map(|r| r.as_slice()).collect();

    let model = match algo {
        LpAlgo::Constant => LpModel::Constant {
            value: targets.iter().sum::<f64>() / targets.len() as f64,
        },
        LpAlgo::Ridge { lambda } => {
            let (weights, bias) = ridge_fit(&rows, &targets, *lambda)?;
            LpModel::Ridge { weights, bias }
        }
        LpAlgo::Tree(params) => LpModel::Tree(RegressionTree::fit(&rows, &targets, params)?),
        LpAlgo::StumpEnsemble(params) => {
            LpModel::StumpRegressor(StumpEnsemble::fit(&rows, &targets, params)?)
        }
    };
    Ok(LossPredictor {
        level,
        loss: loss.clone(),
        model,
    })
}

/// Ridge regression with unregularized intercept via normal equations.
fn ridge_fit(rows: &[&[f64]], targets: &[f64], lambda: f64) -> Result<(Vec<f64>, f64)> {
    if lambda < 0.0 {
        return Err(Error::Config(format!("ridge lambda {lambda} must be >= 0")));
    }
    let n = rows.len();
    let d = rows[0].len();
    let dim = d + 1; // intercept first
    let mut xtx = nalgebra::DMatrix::<f64>::zeros(dim, dim);
    let mut xtz = nalgebra::DVector::<f64>::zeros(dim);
    for (row, &z) in rows.iter().zip(targets) {
        let mut aug = Vec::with_capacity(dim);
        aug.push(1.0);
        aug.extend_from_slice(row);
        for i in 0..dim {
            for j in 0..dim {
                xtx[(i, j)] += aug[i] * aug[j];
            }
            xtz[i] += aug[i] * z;
        }
    }
    for i in 1..dim {
        xtx[(i, i)] += lambda * n as f64;
    }
    // Tiny jitter on the intercept keeps the system solvable when features
    // are degenerate.
    xtx[(0, 0)] += 1e-12;
    let solution = xtx
        .lu()
        .solve(&xtz)
        .ok_or_else(|| Error::Data("ridge normal equations are singular".into()))?;
    let bias = solution[0];
    let weights = (1..dim).map(|i| solution[i]).collect();
    Ok((weights, bias))
}

/// Squared-error comparison of a loss predictor against the self-entropy
/// baseline on the same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvantageReport {
    pub sep_sq_error: f64,
    pub lp_sq_error: f64,
    /// Exactly `sep_sq_error - lp_sq_error`.
    pub advantage: f64,
    /// Standard error of the mean per-row squared-error difference.
    pub advantage_std_err: f64,
    pub n: usize,
}

/// Computes the advantage of `lp` over the self-entropy predictor of
/// `loss` for `p`, on the provided data.
pub fn advantage(
    lp: &LossPredictor,
    loss: &ProperLoss,
    p: &Predictor,
    data: &Dataset,
) -> Result<AdvantageReport> {
    if data.is_empty() {
        return Err(Error::Data("advantage needs at least one row".into()));
    }
    let views = feature_views(lp.level, p, data)?;
    let z = realized_losses(loss, p, data)?;
    let n = data.len();
    let mut sep_sum = 0.0;
    let mut lp_sum = 0.0;
    let mut diffs = Vec::with_capacity(n);
    for (view, &zi) in views.iter().zip(&z) {
        let sep = loss.entropy(view.prediction);
        let pred = lp.predict(view)?;
        let ds = (zi - sep) * (zi - sep);
        let dl = (zi - pred) * (zi - pred);
        sep_sum += ds;
        lp_sum += dl;
        diffs.push(ds - dl);
    }
    let sep_sq_error = sep_sum / n as f64;
    let lp_sq_error = lp_sum / n as f64;
    let adv = sep_sq_error - lp_sq_error;
    let mean_diff = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs
        .iter()
        .map(|d| (d - mean_diff) * (d - mean_diff))
        .sum::<f64>()
        / n as f64;
    Ok(AdvantageReport {
        sep_sq_error,
        lp_sq_error,
        advantage: adv,
        advantage_std_err: (var / n as f64).sqrt(),
        n,
    })
}

/// Converts a loss predictor into a multicalibration witness
/// `c(phi) = scale * (LP(phi) - H(p(x))) * H'(p(x))`.
///
/// With `[0, 1]`-valued loss predictors the product already lies in
/// `[-1, 1]` and `scale` is 1; a rescale by 1/2 (recorded in the returned
/// function) is applied only for forms that can leave that range.
pub fn witness_from_lp(lp: &LossPredictor, loss: &ProperLoss) -> TestFunction {
    TestFunction::LossWeighted {
        f: Box::new(lp.clone()),
        loss: loss.clone(),
        scale: 1.0,
    }
}

/// Builds the loss predictor `clamp(H(p(x)) + beta * delta(phi))` from a
/// witness `delta` with caller-verified correlation at least `beta`; its
/// advantage on the same data is at least `beta^2`.
pub fn lp_from_witness(
    delta: &TestFunction,
    beta: f64,
    loss: &ProperLoss,
    level: ViewLevel,
) -> Result<LossPredictor> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta={beta} outside [0, 1]")));
    }
    Ok(LossPredictor {
        level,
        loss: loss.clone(),
        model: LpModel::Shifted {
            beta,
            delta: Box::new(delta.clone()),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_generate, SynthForm, SynthSpec};
    use crate::predictors::{fit, ModelSpec};

    fn one_point_setup() -> (Dataset, Predictor, ProperLoss) {
        // Two identical rows keep `split` and friends happy elsewhere;
        // semantically this is the one-point distribution p=0.9, y=0.
        let data = Dataset::new(
            vec!["x0".into(), "x1".into()],
            vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            vec![0, 0],
            Default::default(),
            None,
            crate::data::Provenance {
                source: "unit".into(),
                seed: None,
                theta: None,
            },
        )
        .unwrap();
        let p = Predictor::Constant { value: 0.9 };
        (data, p, ProperLoss::squared())
    }

    #[test]
    fn self_entropy_values() {
        let sq = ProperLoss::squared();
        assert!((self_entropy(&sq, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((self_entropy(&sq, 0.9).unwrap() - 0.09).abs() < 1e-12);
        assert_eq!(self_entropy(&sq, 0.0).unwrap(), sq.eval(0, 0.0).unwrap());
        assert!(self_entropy(&sq, 1.2).is_err());
    }

    #[test]
    fn residual_identity() {
        // loss(y, p(x)) - H(p(x)) = (y - p(x)) H'(p(x)).
        let losses = crate::losses::builtin_losses();
        for loss in &losses {
            for y in [0u8, 1] {
                for i in 0..=64 {
                    let v = i as f64 / 64.0;
                    let lhs = loss.eval(y, v).unwrap() - loss.entropy(v);
                    let rhs = (f64::from(y) - v) * loss.superderivative(v);
                    assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn advantage_of_sep_is_zero() {
        let (data, p, sq) = one_point_setup();
        let sep = LossPredictor::self_entropy(sq.clone());
        let rep = advantage(&sep, &sq, &p, &data).unwrap();
        assert_eq!(rep.advantage, 0.0);
        assert_eq!(rep.n, 2);
    }

    #[test]
    fn one_point_advantage_is_05184() {
        let (data, p, sq) = one_point_setup();
        let lp = LossPredictor::constant(sq.clone(), 0.81);
        let rep = advantage(&lp, &sq, &p, &data).unwrap();
        assert!((rep.sep_sq_error - 0.5184).abs() < 1e-12);
        assert_eq!(rep.lp_sq_error, 0.0);
        assert!((rep.advantage - 0.5184).abs() < 1e-12);
    }

    #[test]
    fn blind_spot_predictor_cannot_be_beaten() {
        // p = 1/2 under squared loss realizes loss 1/4 regardless of labels.
        let data = synth_generate(
            &SynthSpec {
                n: 200,
                d: 2,
                form: SynthForm::Logistic,
                theta: 0.0,
            },
            3,
        )
        .unwrap();
        let p = Predictor::Constant { value: 0.5 };
        let sq = ProperLoss::squared();
        for lp in [
            LossPredictor::constant(sq.clone(), 0.1),
            train_loss_predictor(
                &LpAlgo::StumpEnsemble(StumpParams::default()),
                &sq,
                &p,
                ViewLevel::InputAware,
                &data,
            )
            .unwrap(),
        ] {
            let rep = advantage(&lp, &sq, &p, &data).unwrap();
            assert!(rep.advantage <= 0.0);
        }
    }

    #[test]
    fn constant_algo_returns_mean_loss() {
        let (data, p, sq) = one_point_setup();
        let lp = train_loss_predictor(&LpAlgo::Constant, &sq, &p, ViewLevel::PredictionOnly, &data)
            .unwrap();
        match lp.model {
            LpModel::Constant { value } => assert!((value - 0.81).abs() < 1e-12),
            _ => panic!(),
        }
    }

    #[test]
    fn regressors_learn_a_constant_target() {
        let (data, p, sq) = one_point_setup();
        for algo in [
            LpAlgo::StumpEnsemble(StumpParams::default()),
            LpAlgo::Tree(TreeParams {
                max_depth: 3,
                min_leaf: 1,
            }),
            LpAlgo::Ridge { lambda: 1e-6 },
        ] {
            let lp =
                train_loss_predictor(&algo, &sq, &p, ViewLevel::InputAware, &data).unwrap();
            let view =
                crate::predictors::feature_view(ViewLevel::InputAware, &p, data.row(0), None)
                    .unwrap();
            assert!(
                (lp.predict(&view).unwrap() - 0.81).abs() < 1e-6,
                "{} missed the constant target",
                lp.algorithm()
            );
        }
    }

    #[test]
    fn sep_is_optimal_for_calibrated_table() {
        // On a calibrated table predictor, for every level set the
        // squared-error-optimal constant prediction equals H(v): the mean
        // realized loss on the level set is exactly H(v).
        let data = synth_generate(
            &SynthSpec {
                n: 600,
                d: 3,
                form: SynthForm::DiscreteGrid,
                theta: 0.0,
            },
            21,
        )
        .unwrap();
        let p = fit(&ModelSpec::Table, &data).unwrap();
        let sq = ProperLoss::squared();
        let preds = p.predict_all(&data).unwrap();
        let z = realized_losses(&sq, &p, &data).unwrap();
        let mut groups: std::collections::BTreeMap<u64, Vec<f64>> = Default::default();
        for (i, &v) in preds.iter().enumerate() {
            groups.entry(v.to_bits()).or_default().push(z[i]);
        }
        for (bits, zs) in groups {
            let v = f64::from_bits(bits);
            let mean = zs.iter().sum::<f64>() / zs.len() as f64;
            assert!(
                (mean - sq.entropy(v)).abs() < 1e-12,
                "level set {v}: mean loss {mean} vs H {}",
                sq.entropy(v)
            );
        }
        // Consequently a trained LP cannot beat the SEP beyond noise.
        let lp = train_loss_predictor(
            &LpAlgo::StumpEnsemble(StumpParams::default()),
            &sq,
            &p,
            ViewLevel::InputAware,
            &data,
        )
        .unwrap();
        let rep = advantage(&lp, &sq, &p, &data).unwrap();
        assert!(rep.advantage <= 3.0 * rep.advantage_std_err + 1e-9);
    }

    #[test]
    fn witness_one_point_values() {
        let (data, p, sq) = one_point_setup();
        let lp = LossPredictor::constant(sq.clone(), 0.81);
        let witness = witness_from_lp(&lp, &sq);
        let view =
            crate::predictors::feature_view(ViewLevel::PredictionOnly, &p, data.row(0), None)
                .unwrap();
        let c = witness.eval_view(&view).unwrap();
        assert!((c - (-0.576)).abs() < 1e-12);
        // E[c (y - p)] = -0.576 * -0.9 = 0.5184 >= adv / 2.
        let corr = c * (0.0 - 0.9);
        assert!((corr - 0.5184).abs() < 1e-12);
        assert!(corr >= 0.5184 / 2.0);
    }

    #[test]
    fn witness_of_sep_is_zero() {
        let sq = ProperLoss::squared();
        let sep = LossPredictor::self_entropy(sq.clone());
        let witness = witness_from_lp(&sep, &sq);
        for i in 0..=10 {
            let v = i as f64 / 10.0;
            let view = FeatureView {
                level: ViewLevel::PredictionOnly,
                prediction: v,
                input_features: None,
                representation: None,
                repr_source: None,
            };
            assert_eq!(witness.eval_view(&view).unwrap(), 0.0);
        }
    }

    #[test]
    fn witness_vanishes_at_blind_spot() {
        let sq = ProperLoss::squared();
        let lp = LossPredictor::constant(sq.clone(), 0.9);
        let witness = witness_from_lp(&lp, &sq);
        let view = FeatureView {
            level: ViewLevel::PredictionOnly,
            prediction: 0.5,
            input_features: None,
            representation: None,
            repr_source: None,
        };
        assert_eq!(witness.eval_view(&view).unwrap(), 0.0);
    }

    #[test]
    fn lp_from_witness_equality_case() {
        let (data, p, sq) = one_point_setup();
        let delta = TestFunction::Constant { value: 1.0 };
        // Correlation = E[delta * H'(p) * (y - p)] = 1 * -0.8 * -0.9 = 0.72.
        let lp = lp_from_witness(&delta, 0.72, &sq, ViewLevel::PredictionOnly).unwrap();
        let view =
            crate::predictors::feature_view(ViewLevel::PredictionOnly, &p, data.row(0), None)
                .unwrap();
        assert!((lp.predict(&view).unwrap() - 0.81).abs() < 1e-12);
        let rep = advantage(&lp, &sq, &p, &data).unwrap();
        assert!((rep.advantage - 0.72 * 0.72).abs() < 1e-12);
    }

    #[test]
    fn lp_from_witness_beta_zero_is_sep() {
        let sq = ProperLoss::squared();
        let delta = TestFunction::Constant { value: 0.0 };
        let lp = lp_from_witness(&delta, 0.0, &sq, ViewLevel::PredictionOnly).unwrap();
        for i in 0..=8 {
            let v = i as f64 / 8.0;
            let view = FeatureView {
                level: ViewLevel::PredictionOnly,
                prediction: v,
                input_features: None,
                representation: None,
                repr_source: None,
            };
            assert_eq!(lp.predict(&view).unwrap(), sq.entropy(v));
        }
        assert!(lp_from_witness(&delta, 1.5, &sq, ViewLevel::PredictionOnly).is_err());
    }

    #[test]
    fn representation_aware_training_uses_internal_features() {
        // Make the realized loss depend on the leaf identity through a
        // miscalibrated tree: shift its predictions via a blend so the
        // leaf one-hot coordinates carry signal about the residual.
        let data = synth_generate(
            &SynthSpec {
                n: 800,
                d: 3,
                form: SynthForm::Logistic,
                theta: 0.0,
            },
            53,
        )
        .unwrap();
        let tree = fit(
            &ModelSpec::Tree(crate::predictors::TreeParams {
                max_depth: 2,
                min_leaf: 20,
            }),
            &data,
        )
        .unwrap();
        let p = Predictor::Blend {
            base: Box::new(tree),
            theta: 0.6,
            target: 0.9,
        };
        let sq = ProperLoss::squared();
        let lp = train_loss_predictor(
            &LpAlgo::Ridge { lambda: 1e-6 },
            &sq,
            &p,
            ViewLevel::RepresentationAware,
            &data,
        )
        .unwrap();
        let rep = advantage(&lp, &sq, &p, &data).unwrap();
        assert!(
            rep.advantage > 0.0,
            "representation-aware ridge should exploit the leaf structure, got {}",
            rep.advantage
        );
    }

    #[test]
    fn witness_and_shifted_predictors_round_trip_as_json() {
        let sq = ProperLoss::squared();
        let lp = LossPredictor::constant(sq.clone(), 0.81);
        let witness = witness_from_lp(&lp, &sq);
        let shifted = lp_from_witness(&witness, 0.25, &sq, ViewLevel::PredictionOnly).unwrap();
        let json = serde_json::to_string(&shifted).unwrap();
        let back: LossPredictor = serde_json::from_str(&json).unwrap();
        for i in 0..=16 {
            let view = FeatureView {
                level: ViewLevel::PredictionOnly,
                prediction: i as f64 / 16.0,
                input_features: None,
                representation: None,
                repr_source: None,
            };
            assert_eq!(shifted.predict(&view).unwrap(), back.predict(&view).unwrap());
        }
    }

    #[test]
    fn advantage_report_round_trips() {
        let (data, p, sq) = one_point_setup();
        let lp = LossPredictor::constant(sq.clone(), 0.81);
        let rep = advantage(&lp, &sq, &p, &data).unwrap();
        let json = serde_json::to_string(&rep).unwrap();
        let back: AdvantageReport = serde_json::from_str(&json).unwrap();
        assert_eq!(rep, back);
    }
}
