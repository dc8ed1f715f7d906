//! Harness composing the library into runnable audits, boosting runs, the
//! basis check, and the advantage-vs-calibration experiment. Every command
//! reads a single JSON config, writes its outputs under one directory, and
//! is deterministic given (config, seed).

pub mod plots;
pub mod stats;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lossaudit::data::Provenance;
use lossaudit::loss_prediction::{
    advantage, train_loss_predictor, witness_from_lp, AdvantageReport, LpAlgo,
};
use lossaudit::losses::{sample_lipschitz_loss, ProperLoss};
use lossaudit::mc_boost::{
    audit_panel, basis_fit, lipschitz_basis, mc_all_lipschitz, LipschitzCertificate,
    LipschitzMcConfig, WalConfig, WalSampling,
};
use lossaudit::multicalibration::{
    binned_ce_values, max_subgroup_ce, smoothed_ce_values, CalibrationMetric, SubgroupCeReport,
};
use lossaudit::predictors::feature_views;
use lossaudit::{
    load_csv, split, synth_generate, CsvSchema, Dataset, Error, ModelSpec, Predictor, Result,
    SynthSpec, ViewLevel,
};

// ---------------------------------------------------------------------------
// Config types
// ---------------------------------------------------------------------------

/// Where a command's dataset comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetConfig {
    /// Generated with the command seed.
    Synth(SynthSpec),
    /// Loaded from disk.
    Csv { path: String, schema: CsvSchema },
}

impl DatasetConfig {
    pub fn build(&self, seed: u64) -> Result<Dataset> {
        match self {
            DatasetConfig::Synth(spec) => synth_generate(spec, seed),
            DatasetConfig::Csv { path, schema } => load_csv(path, schema),
        }
    }
}

/// A loss referenced from a config: a built-in by name or a sampled
/// Lipschitz loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LossConfig {
    Named(String),
    Sampled { seed: u64, pieces: usize },
}

impl LossConfig {
    pub fn resolve(&self) -> Result<ProperLoss> {
        match self {
            LossConfig::Named(name) => match name.as_str() {
                "squared" => Ok(ProperLoss::squared()),
                "half-squared" => Ok(ProperLoss::half_squared()),
                "clipped-cross-entropy" => Ok(ProperLoss::clipped_cross_entropy()),
                other => Err(Error::Config(format!("unknown loss `{other}`"))),
            },
            LossConfig::Sampled { seed, pieces } => Ok(sample_lipschitz_loss(*seed, *pieces)),
        }
    }
}

/// Base predictor: a model family plus an optional blend toward a constant
/// (the miscalibration knob).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub family: ModelSpec,
    #[serde(default)]
    pub blend: Option<BlendConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlendConfig {
    /// Blend weight; `None` takes the dataset's recorded theta.
    pub theta: Option<f64>,
    pub target: f64,
}

impl PredictorConfig {
    pub fn fit(&self, data: &Dataset) -> Result<Predictor> {
        let base = lossaudit::fit(&self.family, data)?;
        match &self.blend {
            None => Ok(base),
            Some(b) => {
                let theta = match b.theta.or(data.provenance.theta) {
                    Some(t) => t,
                    None => {
                        return Err(Error::Config(
                            "blend requested but no theta given or recorded".into(),
                        ))
                    }
                };
                if !(0.0..=1.0).contains(&theta) || !(0.0..=1.0).contains(&b.target) {
                    return Err(Error::Config("blend theta/target outside [0, 1]".into()));
                }
                Ok(Predictor::Blend {
                    base: Box::new(base),
                    theta,
                    target: b.target,
                })
            }
        }
    }
}

fn default_split() -> (f64, f64) {
    (0.5, 0.5)
}

fn default_bins() -> usize {
    10
}

fn default_bandwidth() -> f64 {
    0.1
}

/// Config for `audit` and `train-lp`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditConfig {
    pub seed: u64,
    pub dataset: DatasetConfig,
    #[serde(default = "default_split")]
    pub split: (f64, f64),
    pub predictor: PredictorConfig,
    pub loss: LossConfig,
    pub level: ViewLevel,
    pub lp_algorithm: LpAlgo,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
}

/// Config for `experiment`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub thetas: Vec<f64>,
    pub families: Vec<ModelSpec>,
    pub lp_algorithms: Vec<LpAlgo>,
    pub loss: LossConfig,
    pub level: ViewLevel,
    #[serde(default = "default_split")]
    pub split: (f64, f64),
    /// Constant the degraded predictors are blended toward.
    pub blend_target: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
}

/// Config for `boost`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostCommandConfig {
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub alpha: f64,
    pub epsilon: f64,
    pub level: ViewLevel,
    #[serde(default = "default_thresholds")]
    pub thresholds_per_coord: usize,
    #[serde(default = "default_panel_size")]
    pub panel_size: usize,
    #[serde(default = "default_panel_pieces")]
    pub panel_pieces: usize,
}

fn default_thresholds() -> usize {
    8
}

fn default_panel_size() -> usize {
    20
}

fn default_panel_pieces() -> usize {
    64
}

/// Config for `basis-check`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisCheckConfig {
    pub seed: u64,
    pub epsilon: f64,
    pub n_losses: usize,
    #[serde(default = "default_panel_pieces")]
    pub pieces: usize,
}

// ---------------------------------------------------------------------------
// Report types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub binned: f64,
    pub smoothed: f64,
    pub max_subgroup: Option<SubgroupCeReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub kind: String,
    pub n_train: usize,
    pub n_test: usize,
    pub predictor_family: String,
    pub loss: String,
    pub level: ViewLevel,
    pub lp_algorithm: String,
    /// Held-out advantage over the self-entropy predictor.
    pub advantage: AdvantageReport,
    /// Held-out correlation of the induced witness with the residuals.
    pub witness_correlation: f64,
    /// `witness_correlation >= advantage/2 - 1e-9`.
    pub witness_bound_holds: bool,
    pub calibration: CalibrationSummary,
    /// Mean `|H'(p(x))|` on the test split; small values mean the
    /// predictor sits near the loss's blind spots and loss prediction is
    /// trivial there.
    pub mean_abs_superderivative: f64,
    pub blind_spot_warning: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgroupCell {
    pub subgroup: String,
    pub calibration_error: f64,
    pub advantage: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub theta: f64,
    pub family: String,
    pub algorithm: String,
    pub max_subgroup_ce: f64,
    pub worst_subgroup: String,
    pub global_ce: f64,
    pub advantage: f64,
    pub advantage_std_err: f64,
    pub per_subgroup: Vec<SubgroupCell>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: String,
    pub n_train: usize,
    pub n_test: usize,
    pub loss: String,
    pub cells: Vec<CellResult>,
    pub spearman_rho: f64,
    pub concordant_pairs: usize,
    pub total_pairs: usize,
    pub sign_concordance: f64,
    /// Largest `|advantage|` among theta = 0 cells.
    pub theta0_max_abs_advantage: f64,
    /// `3 / sqrt(n_test)`.
    pub noise_tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoostReport {
    pub kind: String,
    pub n: usize,
    pub certificate: LipschitzCertificate,
    /// Panel audit of the untouched starting predictor (constant 1/2).
    pub pre_boost_panel_advantage: f64,
    pub post_boost_panel_advantage: f64,
    pub bound_holds: bool,
    pub advantage_decreased: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisCheckReport {
    pub kind: String,
    pub epsilon: f64,
    pub d: usize,
    pub lambda: f64,
    pub n_losses: usize,
    pub max_sup_error: f64,
    pub max_coefficient_norm: f64,
    pub ok: bool,
    pub trivial: bool,
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut body = serde_json::to_string_pretty(value)?;
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}

fn out_path(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

/// Writes the resolved config next to the outputs.
fn write_resolved<T: Serialize>(out: &Path, config: &T) -> Result<()> {
    write_json(&out_path(out, "resolved_config.json"), config)
}

// ---------------------------------------------------------------------------
// audit / train-lp
// ---------------------------------------------------------------------------

/// Threshold below which the audit flags blind-spot-dominated predictions.
const BLIND_SPOT_MEAN_SLOPE: f64 = 0.05;

fn check_metric_params(bins: usize, bandwidth: f64) -> Result<()> {
    if bins < 1 {
        return Err(Error::Config("bins must be >= 1".into()));
    }
    if bandwidth <= 0.0 || !bandwidth.is_finite() {
        return Err(Error::Config(format!(
            "bandwidth {bandwidth} must be positive"
        )));
    }
    Ok(())
}

fn audit_core(cfg: &AuditConfig) -> Result<(AuditReport, Predictor, lossaudit::LossPredictor)> {
    check_metric_params(cfg.bins, cfg.bandwidth)?;
    let data = cfg.dataset.build(cfg.seed)?;
    let (train, test) = split(&data, cfg.split, cfg.seed.wrapping_add(1))?;
    let loss = cfg.loss.resolve()?;
    let p = cfg.predictor.fit(&train)?;
    let lp = train_loss_predictor(&cfg.lp_algorithm, &loss, &p, cfg.level, &train)?;

    let adv = advantage(&lp, &loss, &p, &test)?;
    let witness = witness_from_lp(&lp, &loss);
    let views = feature_views(cfg.level, &p, &test)?;
    let witness_correlation = views
        .iter()
        .enumerate()
        .map(|(i, v)| {
            Ok(witness.eval_view(v)? * (f64::from(test.label(i)) - v.prediction))
        })
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>()
        / test.len() as f64;

    let preds = p.predict_all(&test)?;
    let calibration = CalibrationSummary {
        binned: binned_ce_values(&preds, test.labels(), cfg.bins),
        smoothed: smoothed_ce_values(&preds, test.labels(), cfg.bandwidth),
        max_subgroup: if test.subgroups().is_empty() {
            None
        } else {
            Some(max_subgroup_ce(
                &p,
                &test,
                CalibrationMetric::Smoothed {
                    bandwidth: cfg.bandwidth,
                },
            )?)
        },
    };
    let mean_abs_slope = preds
        .iter()
        .map(|&v| loss.superderivative(v).abs())
        .sum::<f64>()
        / preds.len() as f64;
    let blind_spot_warning = mean_abs_slope < BLIND_SPOT_MEAN_SLOPE;
    if blind_spot_warning {
        log::warn!(
            "predictions concentrate near blind spots of `{}` (mean |H'| = {mean_abs_slope:.4}); \
             loss prediction is trivially accurate there",
            loss.name
        );
    }

    let report = AuditReport {
        kind: "audit".into(),
        n_train: train.len(),
        n_test: test.len(),
        predictor_family: p.family().into(),
        loss: loss.name.clone(),
        level: cfg.level,
        lp_algorithm: cfg.lp_algorithm.name().into(),
        witness_bound_holds: witness_correlation >= adv.advantage / 2.0 - 1e-9,
        advantage: adv,
        witness_correlation,
        calibration,
        mean_abs_superderivative: mean_abs_slope,
        blind_spot_warning,
    };
    Ok((report, p, lp))
}

pub fn run_audit(cfg: &AuditConfig, out: &Path) -> Result<AuditReport> {
    fs::create_dir_all(out)?;
    write_resolved(out, cfg)?;
    let (report, p, lp) = audit_core(cfg)?;
    write_json(&out_path(out, "predictor.json"), &p)?;
    write_json(&out_path(out, "loss_predictor.json"), &lp)?;
    write_json(&out_path(out, "report.json"), &report)?;
    Ok(report)
}

pub fn run_train_lp(cfg: &AuditConfig, out: &Path) -> Result<AuditReport> {
    fs::create_dir_all(out)?;
    write_resolved(out, cfg)?;
    let (mut report, p, lp) = audit_core(cfg)?;
    report.kind = "train-lp".into();
    write_json(&out_path(out, "predictor.json"), &p)?;
    write_json(&out_path(out, "loss_predictor.json"), &lp)?;
    write_json(&out_path(out, "report.json"), &report)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

fn family_label(spec: &ModelSpec) -> String {
    match spec {
        ModelSpec::Constant { .. } => "constant".into(),
        ModelSpec::Table => "table".into(),
        ModelSpec::Logistic(_) => "logistic".into(),
        ModelSpec::NaiveBayes => "naive-bayes".into(),
        ModelSpec::Tree(_) => "tree".into(),
        ModelSpec::StumpEnsemble(_) => "stump-ensemble".into(),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    if cfg.families.len() < 3 {
        return Err(Error::Config(
            "the experiment needs at least 3 base-model families".into(),
        ));
    }
    if cfg.lp_algorithms.len() < 2 {
        return Err(Error::Config(
            "the experiment needs at least 2 loss-predictor algorithms".into(),
        ));
    }
    check_metric_params(1, cfg.bandwidth)?;
    fs::create_dir_all(out)?;
    write_resolved(out, cfg)?;
    let loss = cfg.loss.resolve()?;

    // One dataset per suite; theta degrades the predictors, not the data.
    let data = synth_generate(
        &SynthSpec {
            n: cfg.n,
            d: cfg.d,
            form: lossaudit::SynthForm::Logistic,
            theta: 0.0,
        },
        cfg.seed,
    )?;
    let (train, test) = split(&data, cfg.split, cfg.seed.wrapping_add(1))?;

    let metric = CalibrationMetric::Smoothed {
        bandwidth: cfg.bandwidth,
    };
    let models_dir = out.join("models");
    fs::create_dir_all(&models_dir)?;
    let mut cells = Vec::new();
    for &theta in &cfg.thetas {
        for family in &cfg.families {
            let base = lossaudit::fit(family, &train)?;
            let p = if theta == 0.0 {
                base
            } else {
                Predictor::Blend {
                    base: Box::new(base),
                    theta,
                    target: cfg.blend_target,
                }
            };
            let cell_tag = format!("theta{theta}_{}", family_label(family));
            write_json(
                &models_dir.join(format!("{cell_tag}.predictor.json")),
                &p,
            )?;
            let preds = p.predict_all(&test)?;
            let global_ce = smoothed_ce_values(&preds, test.labels(), cfg.bandwidth);
            let subgroup_ce = max_subgroup_ce(&p, &test, metric)?;
            for algo in &cfg.lp_algorithms {
                let lp = train_loss_predictor(algo, &loss, &p, cfg.level, &train)?;
                write_json(
                    &models_dir.join(format!("{cell_tag}_{}.lp.json", algo.name())),
                    &lp,
                )?;
                let adv = advantage(&lp, &loss, &p, &test)?;
                let mut per_subgroup = Vec::new();
                for (name, ce) in &subgroup_ce.per_subgroup {
                    let mask = test.mask(name).expect("mask exists");
                    let sub = test.filter_mask(mask);
                    let sub_adv = advantage(&lp, &loss, &p, &sub)?;
                    per_subgroup.push(SubgroupCell {
                        subgroup: name.clone(),
                        calibration_error: *ce,
                        advantage: sub_adv.advantage,
                        n: sub.len(),
                    });
                }
                cells.push(CellResult {
                    theta,
                    family: family_label(family),
                    algorithm: algo.name().into(),
                    max_subgroup_ce: subgroup_ce.value,
                    worst_subgroup: subgroup_ce.subgroup.clone(),
                    global_ce,
                    advantage: adv.advantage,
                    advantage_std_err: adv.advantage_std_err,
                    per_subgroup,
                });
            }
        }
    }

    let xs: Vec<f64> = cells.iter().map(|c| c.max_subgroup_ce).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.advantage).collect();
    let rho = stats::spearman(&xs, &ys);
    let (concordant, total) = stats::sign_concordance(&xs, &ys);
    let theta0_max_abs_advantage = cells
        .iter()
        .filter(|c| c.theta == 0.0)
        .map(|c| c.advantage.abs())
        .fold(0.0, f64::max);

    let report = ExperimentReport {
        kind: "experiment".into(),
        n_train: train.len(),
        n_test: test.len(),
        loss: loss.name.clone(),
        spearman_rho: rho,
        concordant_pairs: concordant,
        total_pairs: total,
        sign_concordance: concordant as f64 / total.max(1) as f64,
        theta0_max_abs_advantage,
        noise_tolerance: 3.0 / (test.len() as f64).sqrt(),
        cells,
    };

    write_tables(&report, out)?;
    write_plots(&report, out)?;
    write_json(&out_path(out, "report.json"), &report)?;
    Ok(report)
}

fn write_tables(report: &ExperimentReport, out: &Path) -> Result<()> {
    let tables = out.join("tables");
    fs::create_dir_all(&tables)?;

    let mut fig1 = csv::Writer::from_path(tables.join("fig1.csv"))?;
    fig1.write_record([
        "theta",
        "family",
        "algorithm",
        "max_subgroup_ce",
        "global_ce",
        "advantage",
        "advantage_std_err",
    ])?;
    for c in &report.cells {
        fig1.write_record([
            format!("{}", c.theta),
            c.family.clone(),
            c.algorithm.clone(),
            format!("{}", c.max_subgroup_ce),
            format!("{}", c.global_ce),
            format!("{}", c.advantage),
            format!("{}", c.advantage_std_err),
        ])?;
    }
    fig1.flush()?;

    // Fig. 2 fixes the loss predictor to the first algorithm.
    let fixed = report
        .cells
        .first()
        .map(|c| c.algorithm.clone())
        .unwrap_or_default();
    let mut fig2 = csv::Writer::from_path(tables.join("fig2.csv"))?;
    fig2.write_record([
        "theta",
        "family",
        "subgroup",
        "subgroup_ce",
        "subgroup_advantage",
        "subgroup_n",
    ])?;
    for c in report.cells.iter().filter(|c| c.algorithm == fixed) {
        for s in &c.per_subgroup {
            fig2.write_record([
                format!("{}", c.theta),
                c.family.clone(),
                s.subgroup.clone(),
                format!("{}", s.calibration_error),
                format!("{}", s.advantage),
                format!("{}", s.n),
            ])?;
        }
    }
    fig2.flush()?;

    let schema = serde_json::json!({
        "fig1.csv": {
            "theta": "miscalibration knob of the cell's base predictor",
            "family": "base predictor family",
            "algorithm": "loss-predictor training algorithm",
            "max_subgroup_ce": "max smoothed calibration error over subgroups (test split)",
            "global_ce": "smoothed calibration error on the full test split",
            "advantage": "held-out advantage of the trained loss predictor over the self-entropy predictor",
            "advantage_std_err": "standard error of the advantage estimate"
        },
        "fig2.csv": {
            "theta": "miscalibration knob",
            "family": "base predictor family",
            "subgroup": "subgroup name",
            "subgroup_ce": "smoothed calibration error restricted to the subgroup",
            "subgroup_advantage": "advantage restricted to the subgroup (fixed loss predictor)",
            "subgroup_n": "subgroup row count in the test split"
        }
    });
    write_json(&tables.join("schema.json"), &schema)
}

fn write_plots(report: &ExperimentReport, out: &Path) -> Result<()> {
    use plots::{scatter_svg, Marker, Series, PALETTE};
    let dir = out.join("plots");
    fs::create_dir_all(&dir)?;

    // Fig. 1: one series per (family, algorithm).
    let mut keys: Vec<(String, String)> = report
        .cells
        .iter()
        .map(|c| (c.family.clone(), c.algorithm.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    let markers = [Marker::Circle, Marker::Square, Marker::Triangle, Marker::Diamond];
    let families: Vec<String> = {
        let mut f: Vec<String> = keys.iter().map(|(f, _)| f.clone()).collect();
        f.dedup();
        f
    };
    let algos: Vec<String> = {
        let mut a: Vec<String> = keys.iter().map(|(_, a)| a.clone()).collect();
        a.sort();
        a.dedup();
        a
    };
    let series1: Vec<Series> = keys
        .iter()
        .map(|(fam, alg)| Series {
            label: format!("{fam}/{alg}"),
            color: PALETTE[families.iter().position(|f| f == fam).unwrap_or(0) % PALETTE.len()]
                .to_string(),
            marker: markers[algos.iter().position(|a| a == alg).unwrap_or(0) % markers.len()],
            points: report
                .cells
                .iter()
                .filter(|c| &c.family == fam && &c.algorithm == alg)
                .map(|c| (c.max_subgroup_ce, c.advantage))
                .collect(),
        })
        .collect();
    fs::write(
        dir.join("fig1.svg"),
        scatter_svg(
            "Loss-prediction advantage vs. max subgroup calibration error",
            "max subgroup smoothed CE",
            "held-out advantage",
            &series1,
        ),
    )?;

    // Fig. 2: fixed algorithm, one series per family, subgroup points.
    let fixed = report
        .cells
        .first()
        .map(|c| c.algorithm.clone())
        .unwrap_or_default();
    let series2: Vec<Series> = families
        .iter()
        .enumerate()
        .map(|(i, fam)| Series {
            label: fam.clone(),
            color: PALETTE[i % PALETTE.len()].to_string(),
            marker: markers[i % markers.len()],
            points: report
                .cells
                .iter()
                .filter(|c| &c.family == fam && c.algorithm == fixed)
                .flat_map(|c| {
                    c.per_subgroup
                        .iter()
                        .map(|s| (s.calibration_error, s.advantage))
                })
                .collect(),
        })
        .collect();
    fs::write(
        dir.join("fig2.svg"),
        scatter_svg(
            "Per-subgroup advantage vs. subgroup calibration error",
            "subgroup smoothed CE",
            "subgroup advantage",
            &series2,
        ),
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// boost
// ---------------------------------------------------------------------------

pub fn run_boost(cfg: &BoostCommandConfig, out: &Path) -> Result<BoostReport> {
    fs::create_dir_all(out)?;
    write_resolved(out, cfg)?;
    let data = cfg.dataset.build(cfg.seed)?;
    let mc_cfg = LipschitzMcConfig {
        alpha: cfg.alpha,
        epsilon: cfg.epsilon,
        level: cfg.level,
        thresholds_per_coord: cfg.thresholds_per_coord,
        panel_size: cfg.panel_size,
        panel_seed: cfg.seed.wrapping_add(101),
        panel_pieces: cfg.panel_pieces,
        sampling: WalSampling::Reuse,
    };
    let (predictor, certificate, trace) = mc_all_lipschitz(&data, &mc_cfg)?;

    // Same audit against the untouched starting point p = 1/2.
    let basis = lipschitz_basis(cfg.epsilon)?;
    let panel: Vec<ProperLoss> = (0..cfg.panel_size)
        .map(|i| sample_lipschitz_loss(mc_cfg.panel_seed.wrapping_add(i as u64), cfg.panel_pieces))
        .collect();
    let wal_cfg = WalConfig {
        thresholds_per_coord: cfg.thresholds_per_coord,
        extra_curves: panel.clone(),
    };
    let (pre_adv, _) = audit_panel(
        &data,
        &Predictor::Constant { value: 0.5 },
        &panel,
        &wal_cfg,
        &basis.as_test_functions(),
        cfg.level,
    )?;

    let mut trace_lines = String::new();
    for round in &trace.rounds {
        trace_lines.push_str(&serde_json::to_string(round)?);
        trace_lines.push('\n');
    }
    fs::write(out_path(out, "trace.jsonl"), trace_lines)?;
    write_json(&out_path(out, "predictor.json"), &predictor)?;
    write_json(&out_path(out, "certificate.json"), &certificate)?;

    let report = BoostReport {
        kind: "boost".into(),
        n: data.len(),
        bound_holds: certificate.panel_max_advantage <= certificate.bound + 1e-9,
        advantage_decreased: certificate.panel_max_advantage <= pre_adv,
        pre_boost_panel_advantage: pre_adv,
        post_boost_panel_advantage: certificate.panel_max_advantage,
        certificate,
    };
    write_json(&out_path(out, "report.json"), &report)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// basis-check
// ---------------------------------------------------------------------------

pub fn run_basis_check(cfg: &BasisCheckConfig, out: &Path) -> Result<BasisCheckReport> {
    fs::create_dir_all(out)?;
    write_resolved(out, cfg)?;
    let basis = lipschitz_basis(cfg.epsilon)?;
    if cfg.n_losses == 0 {
        log::warn!("basis-check invoked with zero losses; trivial pass");
    }
    let mut max_sup = 0.0f64;
    let mut max_norm = 0.0f64;
    let mut ok = true;
    for i in 0..cfg.n_losses {
        let loss = sample_lipschitz_loss(cfg.seed.wrapping_add(i as u64), cfg.pieces);
        match basis_fit(&basis, |v| loss.superderivative(v), true) {
            Ok(fit) => {
                max_sup = max_sup.max(fit.sup_error);
                max_norm = max_norm.max(fit.coefficient_norm);
            }
            Err(e) => {
                log::error!("fit of `{}` violated the basis guarantee: {e}", loss.name);
                ok = false;
            }
        }
    }
    let report = BasisCheckReport {
        kind: "basis-check".into(),
        epsilon: cfg.epsilon,
        d: basis.d(),
        lambda: basis.lambda,
        n_losses: cfg.n_losses,
        max_sup_error: max_sup,
        max_coefficient_norm: max_norm,
        ok,
        trivial: cfg.n_losses == 0,
    };
    write_json(&out_path(out, "report.json"), &report)?;
    if !ok {
        return Err(Error::BasisViolation(format!(
            "max sup error {max_sup}, max coefficient norm {max_norm}"
        )));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

/// Renders a short human summary of a previous run's `report.json`.
pub fn summarize_report(out: &Path) -> Result<String> {
    let raw = fs::read_to_string(out_path(out, "report.json"))?;
    let value: serde_json::Value = serde_json::from_str(&raw)?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .unwrap_or("unknown");
    let mut lines = vec![format!("run kind: {kind}")];
    match kind {
        "audit" | "train-lp" => {
            let rep: AuditReport = serde_json::from_str(&raw)?;
            lines.push(format!(
                "predictor {} + {} loss predictor on {} test rows",
                rep.predictor_family, rep.lp_algorithm, rep.n_test
            ));
            lines.push(format!(
                "held-out advantage {:.6} (std err {:.6})",
                rep.advantage.advantage, rep.advantage.advantage_std_err
            ));
            lines.push(format!(
                "witness correlation {:.6} (bound holds: {})",
                rep.witness_correlation, rep.witness_bound_holds
            ));
            lines.push(format!(
                "calibration: binned {:.6}, smoothed {:.6}",
                rep.calibration.binned, rep.calibration.smoothed
            ));
            if let Some(sg) = &rep.calibration.max_subgroup {
                lines.push(format!(
                    "worst subgroup `{}` at {:.6}",
                    sg.subgroup, sg.value
                ));
            }
            if rep.blind_spot_warning {
                lines.push(format!(
                    "warning: predictions sit near blind spots (mean |H'| = {:.4})",
                    rep.mean_abs_superderivative
                ));
            }
        }
        "experiment" => {
            let rep: ExperimentReport = serde_json::from_str(&raw)?;
            lines.push(format!(
                "{} cells; Spearman rho {:.4}; sign concordance {}/{} = {:.3}",
                rep.cells.len(),
                rep.spearman_rho,
                rep.concordant_pairs,
                rep.total_pairs,
                rep.sign_concordance
            ));
            lines.push(format!(
                "theta=0 max |advantage| {:.6} vs noise tolerance {:.6}",
                rep.theta0_max_abs_advantage, rep.noise_tolerance
            ));
        }
        "boost" => {
            let rep: BoostReport = serde_json::from_str(&raw)?;
            lines.push(format!(
                "rounds {}; certificate bound {:.4} (alpha {}, epsilon {})",
                rep.certificate.rounds,
                rep.certificate.bound,
                rep.certificate.alpha,
                rep.certificate.epsilon
            ));
            lines.push(format!(
                "panel advantage {:.6} -> {:.6} (bound holds: {}, decreased: {})",
                rep.pre_boost_panel_advantage,
                rep.post_boost_panel_advantage,
                rep.bound_holds,
                rep.advantage_decreased
            ));
        }
        "basis-check" => {
            let rep: BasisCheckReport = serde_json::from_str(&raw)?;
            lines.push(format!(
                "epsilon {} -> d = {}; max sup error {:.6}, max norm {:.6}, ok: {}",
                rep.epsilon, rep.d, rep.max_sup_error, rep.max_coefficient_norm, rep.ok
            ));
        }
        _ => lines.push("unrecognized report; raw JSON follows".into()),
    }
    Ok(lines.join("\n"))
}

/// Loads a JSON config file.
pub fn load_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let raw = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&raw)?)
}

/// Provenance helper for hand-assembled datasets in tests.
pub fn test_provenance(source: &str) -> Provenance {
    Provenance {
        source: source.into(),
        seed: None,
        theta: None,
    }
}
