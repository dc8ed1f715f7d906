//! Base predictors `p: X -> [0, 1]` trained in-repo, and the feature views
//! that loss predictors and test functions consume.

mod cart;
mod logistic;
mod naive_bayes;
mod stumps;

pub use cart::{RegressionTree, TreeNode, TreeParams};
pub use logistic::{LogisticModel, LogisticParams};
pub use naive_bayes::NaiveBayesModel;
pub use stumps::{Stump, StumpEnsemble, StumpParams};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mc_boost::BoostedPredictor;

/// How much of the world a loss predictor or test function sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViewLevel {
    /// Only the prediction `p(x)`.
    PredictionOnly,
    /// The prediction and the input features.
    InputAware,
    /// Prediction, input features, and a model representation of `x`.
    RepresentationAware,
}

/// Whether a representation was computed by the predictor itself or came
/// from outside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReprSource {
    Internal,
    External,
}

/// The input `phi(p, x)` of a loss predictor or test function.
///
/// `level` determines exactly which optional fields are populated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureView {
    pub level: ViewLevel,
    pub prediction: f64,
    pub input_features: Option<Vec<f64>>,
    pub representation: Option<Vec<f64>>,
    pub repr_source: Option<ReprSource>,
}

impl FeatureView {
    fn validate(self) -> Result<Self> {
        if !(0.0..=1.0).contains(&self.prediction) {
            return Err(Error::Domain(format!(
                "view prediction {} outside [0, 1]",
                self.prediction
            )));
        }
        let finite = |v: &Option<Vec<f64>>| v.iter().flatten().all(|x| x.is_finite());
        if !finite(&self.input_features) || !finite(&self.representation) {
            return Err(Error::Domain("view carries non-finite values".into()));
        }
        let ok = match self.level {
            ViewLevel::PredictionOnly => {
                self.input_features.is_none() && self.representation.is_none()
            }
            ViewLevel::InputAware => {
                self.input_features.is_some() && self.representation.is_none()
            }
            ViewLevel::RepresentationAware => {
                self.input_features.is_some() && self.representation.is_some()
            }
        };
        if !ok {
            return Err(Error::Domain(
                "view fields do not match its level".into(),
            ));
        }
        Ok(self)
    }

    /// Number of flattened coordinates: prediction, inputs, representation.
    pub fn dim(&self) -> usize {
        1 + self.input_features.as_ref().map_or(0, Vec::len)
            + self.representation.as_ref().map_or(0, Vec::len)
    }

    /// Flattened coordinate access; index 0 is the prediction.
    pub fn coord(&self, i: usize) -> f64 {
        if i == 0 {
            return self.prediction;
        }
        let mut idx = i - 1;
        if let Some(inp) = &self.input_features {
            if idx < inp.len() {
                return inp[idx];
            }
            idx -= inp.len();
        }
        self.representation.as_ref().expect("coord out of range")[idx]
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.push(self.prediction);
        if let Some(inp) = &self.input_features {
            v.extend_from_slice(inp);
        }
        if let Some(r) = &self.representation {
            v.extend_from_slice(r);
        }
        v
    }

    pub fn coord_name(&self, i: usize) -> String {
        if i == 0 {
            return "pred".into();
        }
        let mut idx = i - 1;
        if let Some(inp) = &self.input_features {
            if idx < inp.len() {
                return format!("x{idx}");
            }
            idx -= inp.len();
        }
        format!("r{idx}")
    }
}

/// Model family plus hyperparameters; training is deterministic given
/// (spec, data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSpec {
    Constant { value: f64 },
    Table,
    Logistic(LogisticParams),
    NaiveBayes,
    Tree(TreeParams),
    StumpEnsemble(StumpParams),
}

/// A trained predictor. All variants are immutable and reentrant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Predictor {
    Constant { value: f64 },
    Table(TablePredictor),
    Logistic(LogisticModel),
    NaiveBayes(NaiveBayesModel),
    Tree(RegressionTree),
    StumpEnsemble(StumpEnsemble),
    /// `(1 - theta) * base + theta * target`: the harness's miscalibration
    /// knob.
    Blend {
        base: Box<Predictor>,
        theta: f64,
        target: f64,
    },
    /// Product-class multicalibration output; see [`crate::mc_boost`].
    Boosted(BoostedPredictor),
}

/// Exact-match lookup table keyed by the full feature vector; unseen keys
/// fall back to the training base rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePredictor {
    /// Sorted by key (lexicographic `total_cmp`) for deterministic lookup
    /// and serialization.
    entries: Vec<(Vec<f64>, f64)>,
    default: f64,
}

impl TablePredictor {
    pub fn fit(data: &Dataset) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Data("cannot fit a table on no rows".into()));
        }
        let mut rows: Vec<usize> = (0..data.len()).collect();
        rows.sort_by(|&a, &b| cmp_rows(data.row(a), data.row(b)));
        let mut entries: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut i = 0;
        while i < rows.len() {
            let mut j = i;
            let mut sum = 0.0;
            while j < rows.len() && cmp_rows(data.row(rows[i]), data.row(rows[j])).is_eq() {
                sum += f64::from(data.label(rows[j]));
                j += 1;
            }
            entries.push((data.row(rows[i]).to_vec(), sum / (j - i) as f64));
            i = j;
        }
        let default =
            data.labels().iter().map(|&y| f64::from(y)).sum::<f64>() / data.len() as f64;
        Ok(Self { entries, default })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self
            .entries
            .binary_search_by(|(k, _)| cmp_rows(k, x))
        {
            Ok(i) => self.entries[i].1,
            Err(_) => self.default,
        }
    }

    pub fn entries(&self) -> &[(Vec<f64>, f64)] {
        &self.entries
    }
}

fn cmp_rows(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.total_cmp(y);
        if ord.is_ne() {
            return ord;
        }
    }
    a.len().cmp(&b.len())
}

/// Trains a predictor of the requested family.
pub fn fit(spec: &ModelSpec, data: &Dataset) -> Result<Predictor> {
    if data.is_empty() {
        return Err(Error::Data("cannot fit on an empty dataset".into()));
    }
    let rows: Vec<&[f64]> = data.rows().collect();
    let targets: Vec<f64> = data.labels_f64();
    Ok(match spec {
        ModelSpec::Constant { value } => {
            if !(0.0..=1.0).contains(value) {
                return Err(Error::Config(format!(
                    "constant predictor value {value} outside [0, 1]"
                )));
            }
            Predictor::Constant { value: *value }
        }
        ModelSpec::Table => Predictor::Table(TablePredictor::fit(data)?),
        ModelSpec::Logistic(params) => {
            Predictor::Logistic(LogisticModel::fit(&rows, data.labels(), params)?)
        }
        ModelSpec::NaiveBayes => {
            Predictor::NaiveBayes(NaiveBayesModel::fit(&rows, data.labels())?)
        }
        ModelSpec::Tree(params) => Predictor::Tree(RegressionTree::fit(&rows, &targets, params)?),
        ModelSpec::StumpEnsemble(params) => {
            Predictor::StumpEnsemble(StumpEnsemble::fit(&rows, &targets, params)?)
        }
    })
}

impl Predictor {
    pub fn family(&self) -> &'static str {
        match self {
            Predictor::Constant { .. } => "constant",
            Predictor::Table(_) => "table",
            Predictor::Logistic(_) => "logistic",
            Predictor::NaiveBayes(_) => "naive-bayes",
            Predictor::Tree(_) => "tree",
            Predictor::StumpEnsemble(_) => "stump-ensemble",
            Predictor::Blend { .. } => "blend",
            Predictor::Boosted(_) => "boosted",
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let v = match self {
            Predictor::Constant { value } => *value,
            Predictor::Table(t) => t.predict(x),
            Predictor::Logistic(m) => m.predict(x)?,
            Predictor::NaiveBayes(m) => m.predict(x)?,
            Predictor::Tree(t) => t.predict(x)?.clamp(0.0, 1.0),
            Predictor::StumpEnsemble(e) => e.predict(x)?,
            Predictor::Blend {
                base,
                theta,
                target,
            } => (1.0 - theta) * base.predict(x)? + theta * target,
            Predictor::Boosted(b) => b.predict(x)?,
        };
        debug_assert!((0.0..=1.0).contains(&v), "prediction {v} left [0, 1]");
        Ok(v)
    }

    /// Predictions for every row of a dataset.
    pub fn predict_all(&self, data: &Dataset) -> Result<Vec<f64>> {
        data.rows().map(|x| self.predict(x)).collect()
    }

    /// The family's internal representation of `x`, when it has one:
    /// one-hot leaf for trees, weighted per-stump outputs for stump
    /// ensembles, the margin for logistic models.
    pub fn internal_representation(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Predictor::Tree(t) => {
                let mut one_hot = vec![0.0; t.n_leaves()];
                one_hot[t.leaf_index(x)?] = 1.0;
                Ok(one_hot)
            }
            Predictor::StumpEnsemble(e) => e.contributions(x),
            Predictor::Logistic(m) => Ok(vec![m.margin(x)?]),
            Predictor::Blend { base, .. } => base.internal_representation(x),
            other => Err(Error::UnsupportedRepresentation(other.family().into())),
        }
    }
}

/// Builds the view `phi(p, x)` at the requested level.
///
/// Supply `ext_repr` exactly when an external representation-aware view is
/// wanted; a representation-aware view without it uses the model's internal
/// representation.
pub fn feature_view(
    level: ViewLevel,
    p: &Predictor,
    x: &[f64],
    ext_repr: Option<&[f64]>,
) -> Result<FeatureView> {
    if ext_repr.is_some() && level != ViewLevel::RepresentationAware {
        return Err(Error::Domain(
            "external representation supplied below representation-aware level".into(),
        ));
    }
    let prediction = p.predict(x)?;
    let view = match level {
        ViewLevel::PredictionOnly => FeatureView {
            level,
            prediction,
            input_features: None,
            representation: None,
            repr_source: None,
        },
        ViewLevel::InputAware => FeatureView {
            level,
            prediction,
            input_features: Some(x.to_vec()),
            representation: None,
            repr_source: None,
        },
        ViewLevel::RepresentationAware => {
            let (repr, source) = match ext_repr {
                Some(r) => (r.to_vec(), ReprSource::External),
                None => (p.internal_representation(x)?, ReprSource::Internal),
            };
            FeatureView {
                level,
                prediction,
                input_features: Some(x.to_vec()),
                representation: Some(repr),
                repr_source: Some(source),
            }
        }
    };
    view.validate()
}

/// Views for every row of a dataset at a fixed level.
pub fn feature_views(level: ViewLevel, p: &Predictor, data: &Dataset) -> Result<Vec<FeatureView>> {
    data.rows().map(|x| feature_view(level, p, x, None)).collect()
}
