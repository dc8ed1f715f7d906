//! Multicalibration auditing: test-function classes, empirical MCE,
//! binned/kernel-smoothed calibration error, subgroup maxima, proper
//! calibration estimates, and the sandwich check relating loss-prediction
//! advantage to MCE.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss_prediction::{advantage, LossPredictor, LpModel};
use crate::losses::ProperLoss;
use crate::mc_boost::Basis;
use crate::predictors::{feature_views, FeatureView, Predictor, ViewLevel};

/// A weight function `c: Phi -> [-1, 1]` used to audit a predictor.
///
/// Functions that reference a subgroup need dataset context and cannot be
/// evaluated from a view alone; see [`TestFunction::needs_groups`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestFunction {
    /// A constant in `[-1, 1]`.
    Constant { value: f64 },
    /// `sign * 1{x in subgroup}`.
    SubgroupSign { subgroup: String, sign: f64 },
    /// `sign * 1{view.coord(coord) >= threshold}`.
    Stump {
        coord: usize,
        threshold: f64,
        sign: f64,
    },
    /// `sign * H(prediction)` for a proper loss's entropy.
    EntropyCurve { loss: ProperLoss, sign: f64 },
    /// `sign * H'(prediction)` for a proper loss's superderivative.
    SuperderivativeCurve { loss: ProperLoss, sign: f64 },
    /// Pointwise product of two test functions.
    Product(Box<TestFunction>, Box<TestFunction>),
    /// `scale * (f(phi) - H(prediction)) * H'(prediction)`: the witness
    /// induced by a loss predictor. `scale` is 1 for `[0, 1]`-valued `f`
    /// and 1/2 when the form could leave `[-1, 1]`.
    LossWeighted {
        f: Box<LossPredictor>,
        loss: ProperLoss,
        scale: f64,
    },
    /// `sign * (f(phi) - H(prediction))`: the update direction a loss
    /// predictor suggests over the self-entropy baseline.
    LpShift {
        f: Box<LossPredictor>,
        loss: ProperLoss,
        sign: f64,
    },
}

impl TestFunction {
    /// True when evaluation requires subgroup membership.
    pub fn needs_groups(&self) -> bool {
        match self {
            TestFunction::SubgroupSign { .. } => true,
            TestFunction::Product(a, b) => a.needs_groups() || b.needs_groups(),
            _ => false,
        }
    }

    /// Evaluates from a view alone; errors for subgroup-dependent forms.
    pub fn eval_view(&self, view: &FeatureView) -> Result<f64> {
        self.eval(view, &|_| {
            panic!("subgroup test function evaluated without dataset context")
        })
    }

    /// Evaluates with a subgroup-membership oracle for the current row.
    pub fn eval(&self, view: &FeatureView, in_group: &dyn Fn(&str) -> bool) -> Result<f64> {
        Ok(match self {
            TestFunction::Constant { value } => *value,
            TestFunction::SubgroupSign { subgroup, sign } => {
                if in_group(subgroup) {
                    *sign
                } else {
                    0.0
                }
            }
            TestFunction::Stump {
                coord,
                threshold,
                sign,
            } => {
                if *coord >= view.dim() {
                    return Err(Error::Arity {
                        expected: view.dim(),
                        got: *coord + 1,
                    });
                }
                if view.coord(*coord) >= *threshold {
                    *sign
                } else {
                    0.0
                }
            }
            TestFunction::EntropyCurve { loss, sign } => sign * loss.entropy(view.prediction),
            TestFunction::SuperderivativeCurve { loss, sign } => {
                sign * loss.superderivative(view.prediction)
            }
            TestFunction::Product(a, b) => a.eval(view, in_group)? * b.eval(view, in_group)?,
            TestFunction::LossWeighted { f, loss, scale } => {
                let sep = loss.entropy(view.prediction);
                scale * (f.predict(view)? - sep) * loss.superderivative(view.prediction)
            }
            TestFunction::LpShift { f, loss, sign } => {
                sign * (f.predict(view)? - loss.entropy(view.prediction))
            }
        })
    }

    /// Values of the function on every row of a dataset.
    pub fn column(&self, data: &Dataset, views: &[FeatureView]) -> Result<Vec<f64>> {
        (0..data.len())
            .map(|i| {
                self.eval(&views[i], &|name| {
                    data.mask(name).is_some_and(|m| m[i])
                })
            })
            .collect()
    }

    /// Stable human-readable identifier, used for deterministic tie-breaks.
    pub fn id(&self) -> String {
        fn sgn(s: f64) -> &'static str {
            if s >= 0.0 {
                "+"
            } else {
                "-"
            }
        }
        match self {
            TestFunction::Constant { value } => format!("const({value})"),
            TestFunction::SubgroupSign { subgroup, sign } => {
                format!("group({subgroup},{})", sgn(*sign))
            }
            TestFunction::Stump {
                coord,
                threshold,
                sign,
            } => format!("stump(v{coord}>={threshold},{})", sgn(*sign)),
            TestFunction::EntropyCurve { loss, sign } => {
                format!("entropy({},{})", loss.name, sgn(*sign))
            }
            TestFunction::SuperderivativeCurve { loss, sign } => {
                format!("superderiv({},{})", loss.name, sgn(*sign))
            }
            TestFunction::Product(a, b) => format!("prod({},{})", a.id(), b.id()),
            TestFunction::LossWeighted { f, loss, scale } => format!(
                "lossw({},{},scale={scale})",
                f.algorithm(),
                loss.name
            ),
            TestFunction::LpShift { f, loss, sign } => {
                format!("lpshift({},{},{})", f.algorithm(), loss.name, sgn(*sign))
            }
        }
    }

    pub fn negated(&self) -> TestFunction {
        match self {
            TestFunction::Constant { value } => TestFunction::Constant { value: -value },
            TestFunction::SubgroupSign { subgroup, sign } => TestFunction::SubgroupSign {
                subgroup: subgroup.clone(),
                sign: -sign,
            },
            TestFunction::Stump {
                coord,
                threshold,
                sign,
            } => TestFunction::Stump {
                coord: *coord,
                threshold: *threshold,
                sign: -sign,
            },
            TestFunction::EntropyCurve { loss, sign } => TestFunction::EntropyCurve {
                loss: loss.clone(),
                sign: -sign,
            },
            TestFunction::SuperderivativeCurve { loss, sign } => {
                TestFunction::SuperderivativeCurve {
                    loss: loss.clone(),
                    sign: -sign,
                }
            }
            TestFunction::LpShift { f, loss, sign } => TestFunction::LpShift {
                f: f.clone(),
                loss: loss.clone(),
                sign: -sign,
            },
            other => TestFunction::Product(
                Box::new(TestFunction::Constant { value: -1.0 }),
                Box::new(other.clone()),
            ),
        }
    }
}

/// Outcome of an MCE computation over an explicit finite class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MceReport {
    /// `max_c |mean c(phi) (y - p(x))|`.
    pub value: f64,
    pub argmax: TestFunction,
    pub argmax_id: String,
    /// `(id, signed correlation)` per test function, in input order.
    pub per_function: Vec<(String, f64)>,
    pub n: usize,
}

/// Exact empirical multicalibration error over a finite class.
pub fn mce_finite(
    class: &[TestFunction],
    p: &Predictor,
    data: &Dataset,
    level: ViewLevel,
) -> Result<MceReport> {
    assert!(!class.is_empty(), "MCE needs a nonempty test class");
    let views = feature_views(level, p, data)?;
    let residuals: Vec<f64> = (0..data.len())
        .map(|i| f64::from(data.label(i)) - views[i].prediction)
        .collect();
    let mut per_function = Vec::with_capacity(class.len());
    let mut best: Option<(f64, usize)> = None;
    for (idx, c) in class.iter().enumerate() {
        let col = c.column(data, &views)?;
        let corr =
            col.iter().zip(&residuals).map(|(c, r)| c * r).sum::<f64>() / data.len() as f64;
        per_function.push((c.id(), corr));
        // Exact ties resolve by function id so the result is independent
        // of evaluation order.
        let better = match &best {
            None => true,
            Some((b, i)) => {
                corr.abs() > *b
                    || (corr.abs() == *b && per_function[idx].0 < per_function[*i].0)
            }
        };
        if better {
            best = Some((corr.abs(), idx));
        }
    }
    let (value, arg_idx) = best.expect("nonempty class");
    Ok(MceReport {
        value,
        argmax: class[arg_idx].clone(),
        argmax_id: class[arg_idx].id(),
        per_function,
        n: data.len(),
    })
}

/// MCE over the loss-prediction class
/// `{(f(phi) - H_l(p(x))) H'_l(p(x)) : f in F, l in Ls}`, together with the
/// guarantee check `max advantage <= 2 * MCE`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossClassMceReport {
    pub mce: MceReport,
    pub max_advantage: f64,
    pub max_advantage_id: String,
    /// `max_advantage <= 2 * mce.value + 1e-9`.
    pub advantage_bound_holds: bool,
}

pub fn mce_loss_class(
    f_class: &[LossPredictor],
    losses: &[ProperLoss],
    p: &Predictor,
    data: &Dataset,
) -> Result<LossClassMceReport> {
    assert!(
        !f_class.is_empty() && !losses.is_empty(),
        "loss-class MCE needs nonempty F and losses"
    );
    let level = f_class[0].level;
    if f_class.iter().any(|f| f.level != level) {
        return Err(Error::Config(
            "all loss predictors in F must share a view level".into(),
        ));
    }
    let mut class = Vec::with_capacity(f_class.len() * losses.len());
    for loss in losses {
        for f in f_class {
            class.push(TestFunction::LossWeighted {
                f: Box::new(f.clone()),
                loss: loss.clone(),
                scale: 1.0,
            });
        }
    }
    let mce = mce_finite(&class, p, data, level)?;
    let mut max_advantage = f64::NEG_INFINITY;
    let mut max_id = String::new();
    for loss in losses {
        for f in f_class {
            let rep = advantage(f, loss, p, data)?;
            if rep.advantage > max_advantage {
                max_advantage = rep.advantage;
                max_id = format!("{}/{}", f.algorithm(), loss.name);
            }
        }
    }
    Ok(LossClassMceReport {
        advantage_bound_holds: max_advantage <= 2.0 * mce.value + 1e-9,
        mce,
        max_advantage,
        max_advantage_id: max_id,
    })
}

/// Expected calibration error over equal-width bins of `p(x)`.
pub fn binned_ce_values(preds: &[f64], labels: &[u8], bins: usize) -> f64 {
    assert!(bins >= 1, "need at least one bin");
    let n = preds.len();
    let mut count = vec![0usize; bins];
    let mut sum_y = vec![0.0; bins];
    let mut sum_p = vec![0.0; bins];
    for (&p, &y) in preds.iter().zip(labels) {
        let b = ((p * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        sum_y[b] += f64::from(y);
        sum_p[b] += p;
    }
    (0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| (sum_y[b] - sum_p[b]).abs() / n as f64)
        .sum()
}

pub fn binned_ce(p: &Predictor, data: &Dataset, bins: usize) -> Result<f64> {
    Ok(binned_ce_values(
        &p.predict_all(data)?,
        data.labels(),
        bins,
    ))
}

/// Grid resolution of the smoothed calibration error.
const SMOOTH_GRID: usize = 512;

/// Kernel-smoothed calibration error: `int |smoothed residual at t| *
/// (smoothed density at t) dt`, which reduces to the integral of the
/// absolute kernel-weighted residual sum. Gaussian kernel with reflection
/// at 0 and 1, evaluated by the trapezoid rule on a 1/512 grid.
///
/// This is a proxy for the smoothed ECE metric used in experimental work on
/// multicalibration, not a reimplementation of it.
pub fn smoothed_ce_values(preds: &[f64], labels: &[u8], bandwidth: f64) -> f64 {
    assert!(bandwidth > 0.0, "bandwidth must be positive");
    let n = preds.len();
    if n == 0 {
        return 0.0;
    }
    let norm = 1.0 / (bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let kernel = |u: f64| -> f64 {
        let z = u / bandwidth;
        if z.abs() > 8.0 {
            0.0
        } else {
            norm * (-0.5 * z * z).exp()
        }
    };
    // Reflection images at -p and 2 - p keep kernel mass inside [0, 1].
    let k_reflected = |t: f64, s: f64| kernel(t - s) + kernel(t + s) + kernel(t - (2.0 - s));
    let step = 1.0 / SMOOTH_GRID as f64;
    let mut integral = 0.0;
    for j in 0..=SMOOTH_GRID {
        let t = j as f64 * step;
        let num: f64 = preds
            .iter()
            .zip(labels)
            .map(|(&p, &y)| k_reflected(t, p) * (f64::from(y) - p))
            .sum::<f64>()
            / n as f64;
        let w = if j == 0 || j == SMOOTH_GRID { 0.5 } else { 1.0 };
        integral += w * num.abs() * step;
    }
    integral
}

pub fn smoothed_ce(p: &Predictor, data: &Dataset, bandwidth: f64) -> Result<f64> {
    Ok(smoothed_ce_values(
        &p.predict_all(data)?,
        data.labels(),
        bandwidth,
    ))
}

/// Which calibration metric to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CalibrationMetric {
    Binned { bins: usize },
    Smoothed { bandwidth: f64 },
}

pub fn calibration_error_values(metric: CalibrationMetric, preds: &[f64], labels: &[u8]) -> f64 {
    match metric {
        CalibrationMetric::Binned { bins } => binned_ce_values(preds, labels, bins),
        CalibrationMetric::Smoothed { bandwidth } => smoothed_ce_values(preds, labels, bandwidth),
    }
}

/// Result of [`max_subgroup_ce`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgroupCeReport {
    pub value: f64,
    pub subgroup: String,
    /// `(subgroup, metric)` for every nonempty subgroup, in name order.
    pub per_subgroup: Vec<(String, f64)>,
    /// Empty subgroups that were skipped (with a logged warning).
    pub skipped: Vec<String>,
}

/// Maximum calibration error over the dataset's named subgroups. Empty
/// masks are skipped with a warning; ties go to the lexicographically
/// first name.
pub fn max_subgroup_ce(
    p: &Predictor,
    data: &Dataset,
    metric: CalibrationMetric,
) -> Result<SubgroupCeReport> {
    if data.subgroups().is_empty() {
        return Err(Error::EmptySubgroup(
            "dataset carries no subgroup masks".into(),
        ));
    }
    let preds = p.predict_all(data)?;
    let mut per_subgroup = Vec::new();
    let mut skipped = Vec::new();
    for (name, mask) in data.subgroups() {
        let rows: Vec<usize> = (0..data.len()).filter(|&i| mask[i]).collect();
        if rows.is_empty() {
            log::warn!("subgroup `{name}` is empty; skipping");
            skipped.push(name.clone());
            continue;
        }
        let sub_preds: Vec<f64> = rows.iter().map(|&i| preds[i]).collect();
        let sub_labels: Vec<u8> = rows.iter().map(|&i| data.label(i)).collect();
        per_subgroup.push((
            name.clone(),
            calibration_error_values(metric, &sub_preds, &sub_labels),
        ));
    }
    if per_subgroup.is_empty() {
        return Err(Error::EmptySubgroup(
            "every subgroup mask is empty".into(),
        ));
    }
    // BTreeMap iteration gives name order, so > keeps the first maximum.
    let (subgroup, value) = per_subgroup
        .iter()
        .fold(None::<(String, f64)>, |acc, (name, v)| match acc {
            Some((bn, bv)) if bv >= *v => Some((bn, bv)),
            _ => Some((name.clone(), *v)),
        })
        .expect("nonempty");
    Ok(SubgroupCeReport {
        value,
        subgroup,
        per_subgroup,
        skipped,
    })
}

/// Proper-calibration estimate from a threshold basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceReport {
    /// `max_g |mean g(p(x)) (y - p(x))|` over the basis functions.
    pub raw_basis_max: f64,
    pub raw_argmax: String,
    pub lambda: f64,
    pub epsilon: f64,
    /// `lambda * raw_basis_max + epsilon`, an upper bound on
    /// `max_l |mean H'_l(p(x)) (y - p(x))|` over losses whose
    /// superderivative the basis fits to `epsilon`.
    pub upper_bound: f64,
    pub n: usize,
}

/// Estimates the proper calibration error of `p` through the basis: the raw
/// basis maximum plus the `(lambda, epsilon)` certificate.
pub fn pce_estimate(p: &Predictor, data: &Dataset, basis: &Basis) -> Result<PceReport> {
    let preds = p.predict_all(data)?;
    let n = data.len();
    let mut raw = f64::NEG_INFINITY;
    let mut argmax = String::new();
    for j in 0..basis.d() {
        let corr = (0..n)
            .map(|i| basis.eval(j, preds[i]) * (f64::from(data.label(i)) - preds[i]))
            .sum::<f64>()
            / n as f64;
        if corr.abs() > raw {
            raw = corr.abs();
            argmax = basis.fn_id(j);
        }
    }
    Ok(PceReport {
        raw_basis_max: raw,
        raw_argmax: argmax,
        lambda: basis.lambda,
        epsilon: basis.epsilon,
        upper_bound: basis.lambda * raw + basis.epsilon,
        n,
    })
}

/// Everything the sandwich check measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// `max_F adv`.
    pub max_advantage: f64,
    /// `MCE({(f - H) H'}, p)`, unrescaled.
    pub mce: f64,
    /// `max_{F'} adv` over the beta grid.
    pub max_augmented_advantage: f64,
    /// Half the beta grid spacing: the discretization slack on the right
    /// inequality.
    pub grid_tolerance: f64,
    pub beta_grid: usize,
}

/// Verifies `max_F adv / 2 <= MCE <= sqrt(max_{F'} adv) + grid tolerance`
/// on the given data, where `F' = {clamp((1 - b) H + b f)}` over a uniform
/// beta grid on `[-1, 1]`.
///
/// Returns the measured quantities; a violation beyond tolerance is an
/// implementation bug and surfaces as [`Error::SandwichViolation`].
pub fn sandwich_check(
    f_class: &[LossPredictor],
    loss: &ProperLoss,
    p: &Predictor,
    data: &Dataset,
    beta_grid: usize,
) -> Result<SandwichReport> {
    if beta_grid < 3 {
        return Err(Error::Config("beta grid must have at least 3 points".into()));
    }
    assert!(!f_class.is_empty(), "sandwich check needs a nonempty F");
    let level = f_class[0].level;

    let mut max_advantage = f64::NEG_INFINITY;
    for f in f_class {
        max_advantage = max_advantage.max(advantage(f, loss, p, data)?.advantage);
    }

    let class: Vec<TestFunction> = f_class
        .iter()
        .map(|f| TestFunction::LossWeighted {
            f: Box::new(f.clone()),
            loss: loss.clone(),
            scale: 1.0,
        })
        .collect();
    let mce = mce_finite(&class, p, data, level)?.value;

    let spacing = 2.0 / (beta_grid - 1) as f64;
    let mut max_aug = f64::NEG_INFINITY;
    for f in f_class {
        for k in 0..beta_grid {
            let beta = -1.0 + k as f64 * spacing;
            let mixed = LossPredictor {
                level,
                loss: loss.clone(),
                model: LpModel::Mix {
                    beta,
                    f: Box::new(f.clone()),
                },
            };
            max_aug = max_aug.max(advantage(&mixed, loss, p, data)?.advantage);
        }
    }

    let grid_tolerance = spacing / 2.0;
    if max_advantage / 2.0 > mce + 1e-9 {
        return Err(Error::SandwichViolation(format!(
            "adv/2 = {} exceeds MCE = {mce}",
            max_advantage / 2.0
        )));
    }
    if mce > max_aug.max(0.0).sqrt() + grid_tolerance + 1e-9 {
        return Err(Error::SandwichViolation(format!(
            "MCE = {mce} exceeds sqrt(max augmented adv) = {} + {grid_tolerance}",
            max_aug.max(0.0).sqrt()
        )));
    }
    Ok(SandwichReport {
        max_advantage,
        mce,
        max_augmented_advantage: max_aug,
        grid_tolerance,
        beta_grid,
    })
}

/// Maximum `|mean a(phi) b(phi) (y - p(x))|` over the product class
/// `{a * b}`; the exhaustive audit used by the boosting loop's exit check.
pub fn mce_product_max(
    a_class: &[TestFunction],
    b_class: &[TestFunction],
    views: &[FeatureView],
    residuals: &[f64],
) -> Result<(f64, String)> {
    let n = views.len() as f64;
    let a_cols: Vec<Vec<f64>> = a_class
        .iter()
        .map(|a| views.iter().map(|v| a.eval_view(v)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let b_cols: Vec<Vec<f64>> = b_class
        .iter()
        .map(|b| views.iter().map(|v| b.eval_view(v)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut best = f64::NEG_INFINITY;
    let mut best_id = String::new();
    for (ai, a_col) in a_cols.iter().enumerate() {
        for (bi, b_col) in b_cols.iter().enumerate() {
            let corr: f64 = a_col
                .iter()
                .zip(b_col)
                .zip(residuals)
                .map(|((a, b), r)| a * b * r)
                .sum::<f64>()
                / n;
            if corr.abs() > best {
                best = corr.abs();
                best_id = format!("{}x{}", a_class[ai].id(), b_class[bi].id());
            }
        }
    }
    Ok((best, best_id))
}
