//! Loss prediction and multicalibration auditing for binary predictors.
//!
//! The crate connects two views of the same question — does a model know
//! where it errs? — through proper losses represented by concave entropy
//! functions:
//!
//! - [`losses`]: proper losses, their entropy/superderivative form,
//!   expected losses, blind spots, and samplers of random Lipschitz losses.
//! - [`predictors`]: base models trained in-repo and the feature views
//!   consumed by loss predictors and test functions.
//! - [`loss_prediction`]: the self-entropy baseline, trained loss
//!   predictors, the advantage functional, and witness conversions in both
//!   directions.
//! - [`multicalibration`]: finite-class MCE, calibration metrics, subgroup
//!   maxima, proper-calibration estimates, and the sandwich check.
//! - [`mc_boost`]: the weak agnostic learner, product-class
//!   multicalibration boosting, the threshold basis, and the
//!   all-Lipschitz-losses pipeline with its certificate.
//! - [`nonproper`]: general losses over action spaces, properization, and
//!   the swap-optimality audit.
//! - [`data`]: CSV ingestion, synthetic generators with known Bayes
//!   probabilities, and seeded splits.

pub mod data;
pub mod error;
pub mod loss_prediction;
pub mod losses;
pub mod mc_boost;
pub mod multicalibration;
pub mod nonproper;
pub mod predictors;
pub mod testkit;

pub use data::{load_csv, split, synth_generate, CsvSchema, Dataset, SynthForm, SynthSpec};
pub use error::{Error, Result};
pub use loss_prediction::{
    advantage, lp_from_witness, self_entropy, train_loss_predictor, witness_from_lp,
    AdvantageReport, LossPredictor, LpAlgo,
};
pub use losses::{builtin_losses, sample_lipschitz_loss, EntropyForm, PiecewiseEntropy, ProperLoss};
pub use mc_boost::{
    basis_fit, gd_update, lipschitz_basis, mc_all_lipschitz, product_class_mc,
    weak_agnostic_learn, Basis, BoostTrace, BoostedPredictor, LipschitzCertificate,
    LipschitzMcConfig, WalConfig, WalOutcome, WalSampling,
};
pub use multicalibration::{
    binned_ce, max_subgroup_ce, mce_finite, mce_loss_class, pce_estimate, sandwich_check,
    smoothed_ce, CalibrationMetric, MceReport, PceReport, SandwichReport, TestFunction,
};
pub use nonproper::{latent_predictor, optimal_action, properize, swap_audit, GeneralLoss};
pub use predictors::{
    feature_view, feature_views, fit, FeatureView, ModelSpec, Predictor, ViewLevel,
};
