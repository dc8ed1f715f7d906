//! Acceptance suite: every shipped guarantee as one test, each printing a
//! pass/fail line with its measured runtime (visible with
//! `cargo test -p lossaudit-cli --test acceptance -- --nocapture`).

use std::path::Path;
use std::time::Instant;

use lossaudit::data::{synth_generate, SynthForm, SynthSpec};
use lossaudit::loss_prediction::{advantage, lp_from_witness, witness_from_lp, LpAlgo};
use lossaudit::losses::{builtin_losses, sample_lipschitz_loss, ProperLoss};
use lossaudit::mc_boost::{
    audit_panel, basis_fit, enumerate_weak_class, lipschitz_basis, mc_all_lipschitz,
    product_class_mc, LipschitzMcConfig, WalConfig, WalSampling,
};
use lossaudit::multicalibration::{mce_finite, mce_product_max, sandwich_check, TestFunction};
use lossaudit::nonproper::{properize, swap_audit, swap_optimal_brute_force, GeneralLoss};
use lossaudit::predictors::{feature_views, StumpParams, ViewLevel};
use lossaudit::testkit::random_instance;
use lossaudit::{Dataset, Predictor};
use lossaudit_cli::{run_experiment, ExperimentConfig, LossConfig};

fn pass(criterion: usize, elapsed: f64, budget: f64, what: &str) {
    println!("[criterion {criterion:2}] PASS ({elapsed:.2}s of {budget:.0}s budget): {what}");
    assert!(
        elapsed < budget,
        "criterion {criterion} exceeded its {budget}s runtime budget ({elapsed:.2}s)"
    );
}

fn acceptance_losses() -> Vec<ProperLoss> {
    let mut losses = builtin_losses();
    for seed in 0..20 {
        losses.push(sample_lipschitz_loss(seed, 64));
    }
    losses
}

#[test]
fn criterion_01_residual_identity() {
    let start = Instant::now();
    for loss in acceptance_losses() {
        for y in [0u8, 1u8] {
            for i in 0..=256u32 {
                let v = f64::from(i) / 256.0;
                let lhs = loss.eval(y, v).unwrap() - loss.entropy(v);
                let rhs = (f64::from(y) - v) * loss.superderivative(v);
                assert!(
                    (lhs - rhs).abs() <= 1e-12,
                    "{} at (y={y}, v={v}): {lhs} vs {rhs}",
                    loss.name
                );
            }
        }
    }
    pass(
        1,
        start.elapsed().as_secs_f64(),
        1.0,
        "residual identity to 1e-12 on the 1/256 grid for builtins + 20 sampled losses",
    );
}

#[test]
fn criterion_02_propriety() {
    let start = Instant::now();
    for loss in acceptance_losses() {
        for i in 0..=64u32 {
            let p_star = f64::from(i) / 64.0;
            let diag = loss.expected_loss(p_star, p_star).unwrap();
            for j in 0..=64u32 {
                let v = f64::from(j) / 64.0;
                let off = loss.expected_loss(p_star, v).unwrap();
                assert!(
                    off >= diag - 1e-9,
                    "{}: L({p_star};{v}) = {off} < {diag}",
                    loss.name
                );
            }
        }
    }
    pass(
        2,
        start.elapsed().as_secs_f64(),
        1.0,
        "propriety within 1e-9 on the 1/64 grid for all losses",
    );
}

#[test]
fn criterion_03_sandwich() {
    let start = Instant::now();
    for seed in 0..100u64 {
        let inst = random_instance(seed);
        let rep = sandwich_check(
            &inst.f_class,
            &inst.loss,
            &inst.predictor,
            &inst.data,
            1001,
        )
        .unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert!(rep.max_advantage / 2.0 <= rep.mce + 1e-9, "seed {seed}");
        assert!(
            rep.mce <= rep.max_augmented_advantage.max(0.0).sqrt() + 2e-3,
            "seed {seed}: MCE {} vs sqrt(B) {}",
            rep.mce,
            rep.max_augmented_advantage.max(0.0).sqrt()
        );
    }
    pass(
        3,
        start.elapsed().as_secs_f64(),
        30.0,
        "sandwich inequality on 100 random instances, beta grid 1001, grid tolerance 2e-3",
    );
}

#[test]
fn criterion_04_constructive_bridges() {
    let start = Instant::now();
    for seed in 0..100u64 {
        let inst = random_instance(seed);
        let views = feature_views(inst.level, &inst.predictor, &inst.data).unwrap();
        let n = inst.data.len() as f64;
        let residuals: Vec<f64> = (0..inst.data.len())
            .map(|i| f64::from(inst.data.label(i)) - views[i].prediction)
            .collect();

        // Advantage -> witness.
        for f in &inst.f_class {
            let adv = advantage(f, &inst.loss, &inst.predictor, &inst.data)
                .unwrap()
                .advantage;
            let witness = witness_from_lp(f, &inst.loss);
            let corr: f64 = views
                .iter()
                .zip(&residuals)
                .map(|(v, r)| witness.eval_view(v).unwrap() * r)
                .sum::<f64>()
                / n;
            assert!(corr >= adv / 2.0 - 1e-9, "seed {seed}");
        }

        // Witness -> predictor through the class argmax.
        let class: Vec<TestFunction> = inst
            .f_class
            .iter()
            .map(|f| witness_from_lp(f, &inst.loss))
            .collect();
        let mce = mce_finite(&class, &inst.predictor, &inst.data, inst.level).unwrap();
        let TestFunction::LossWeighted { f, .. } = &mce.argmax else {
            panic!("argmax form")
        };
        let signed: f64 = views
            .iter()
            .zip(&residuals)
            .map(|(v, r)| mce.argmax.eval_view(v).unwrap() * r)
            .sum::<f64>()
            / n;
        let delta = TestFunction::LpShift {
            f: f.clone(),
            loss: inst.loss.clone(),
            sign: signed.signum(),
        };
        let beta = mce.value.min(1.0);
        let lp = lp_from_witness(&delta, beta, &inst.loss, inst.level).unwrap();
        let rep = advantage(&lp, &inst.loss, &inst.predictor, &inst.data).unwrap();
        assert!(
            rep.advantage >= beta * beta - 1e-9,
            "seed {seed}: {} < {}",
            rep.advantage,
            beta * beta
        );
    }

    // The documented one-point instance: p = 0.9, y = 0, squared loss,
    // delta = +1 has correlation 0.72 and the constructed predictor's
    // advantage is exactly 0.72^2 = 0.5184.
    let data = one_point_data();
    let p = Predictor::Constant { value: 0.9 };
    let sq = ProperLoss::squared();
    let delta = TestFunction::Constant { value: 1.0 };
    let beta = delta.eval_view(&feature_views(ViewLevel::PredictionOnly, &p, &data).unwrap()[0])
        .unwrap()
        * sq.superderivative(0.9)
        * (0.0 - 0.9);
    let lp = lp_from_witness(&delta, beta, &sq, ViewLevel::PredictionOnly).unwrap();
    let rep = advantage(&lp, &sq, &p, &data).unwrap();
    assert_eq!(rep.advantage, beta * beta, "one-point equality case");
    assert!((rep.advantage - 0.5184).abs() < 1e-12);

    pass(
        4,
        start.elapsed().as_secs_f64(),
        10.0,
        "witness correlation >= adv/2 and bridge advantage >= beta^2 on 100 instances; one-point equality exact",
    );
}

fn one_point_data() -> Dataset {
    Dataset::new(
        vec!["x0".into()],
        vec![vec![0.0]],
        vec![0],
        Default::default(),
        None,
        lossaudit_cli::test_provenance("acceptance-one-point"),
    )
    .unwrap()
}

#[test]
fn criterion_05_gradient_step_equality() {
    let start = Instant::now();
    let p = Predictor::Constant { value: 0.5 };
    let delta = TestFunction::Constant { value: 1.0 };
    let updated =
        lossaudit::gd_update(&p, ViewLevel::PredictionOnly, &delta, 0.5).unwrap();
    let v = updated.predict(&[0.0]).unwrap();
    let before = (0.5f64 - 1.0) * (0.5f64 - 1.0);
    let after = (v - 1.0) * (v - 1.0);
    assert_eq!(before - after, 0.25, "improvement must be exactly beta^2");
    pass(
        5,
        start.elapsed().as_secs_f64(),
        1.0,
        "projected gradient step realizes improvement exactly 0.25",
    );
}

/// Shared setup for criteria 6 and 9: 20 seeded synthetic runs at
/// n = 2000, alpha = 0.1, epsilon = 0.2.
const SUITE_SEEDS: u64 = 20;
const SUITE_ALPHA: f64 = 0.1;
const SUITE_EPSILON: f64 = 0.2;

fn suite_data(seed: u64) -> Dataset {
    synth_generate(
        &SynthSpec {
            n: 2000,
            d: 3,
            form: SynthForm::Logistic,
            theta: 0.0,
        },
        1000 + seed,
    )
    .unwrap()
}

#[test]
fn criterion_06_product_class_boosting() {
    let start = Instant::now();
    let basis = lipschitz_basis(SUITE_EPSILON).unwrap();
    let b_class = basis.as_test_functions();
    let wal_cfg = WalConfig {
        thresholds_per_coord: 8,
        extra_curves: vec![],
    };
    let cap = (4.0 / (SUITE_ALPHA * SUITE_ALPHA)).ceil() as usize;
    assert_eq!(cap, 400);

    for seed in 0..SUITE_SEEDS {
        let data = suite_data(seed);

        // Run on the labels: termination and the exhaustive audit.
        let (p, trace) = product_class_mc(
            &data,
            &data.labels_f64(),
            &b_class,
            &wal_cfg,
            ViewLevel::InputAware,
            SUITE_ALPHA,
            WalSampling::Reuse,
        )
        .unwrap();
        assert!(trace.rounds.len() <= cap, "seed {seed}");
        let preds = p.predict_all(&data).unwrap();
        let residuals: Vec<f64> = (0..data.len())
            .map(|i| f64::from(data.label(i)) - preds[i])
            .collect();
        let views = input_aware_views(&data, &preds);
        let (mce, id) = mce_product_max(
            &enumerate_weak_class(&views, &wal_cfg),
            &b_class,
            &views,
            &residuals,
        )
        .unwrap();
        assert!(
            mce <= SUITE_ALPHA,
            "seed {seed}: exhaustive product MCE {mce} > alpha at {id}"
        );

        // Run on the known Bayes probabilities: the potential argument is
        // realized exactly, dropping at least alpha^2/4 per round.
        let targets = data.p_star().unwrap().to_vec();
        let (_, trace_star) = product_class_mc(
            &data,
            &targets,
            &b_class,
            &wal_cfg,
            ViewLevel::InputAware,
            SUITE_ALPHA,
            WalSampling::Reuse,
        )
        .unwrap();
        assert!(trace_star.rounds.len() <= cap, "seed {seed}");
        let mut prev = targets.iter().map(|t| (t - 0.5f64).powi(2)).sum::<f64>()
            / data.len() as f64;
        for round in &trace_star.rounds {
            let drop = prev - round.potential_proxy;
            assert!(
                drop >= SUITE_ALPHA * SUITE_ALPHA / 4.0 - 1e-9,
                "seed {seed} round {}: potential dropped only {drop}",
                round.round
            );
            prev = round.potential_proxy;
        }
    }
    pass(
        6,
        start.elapsed().as_secs_f64(),
        120.0,
        "20 runs terminate within 400 rounds, audit-clean product MCE <= alpha, potential drops >= alpha^2/4",
    );
}

fn input_aware_views(
    data: &Dataset,
    preds: &[f64],
) -> Vec<lossaudit::predictors::FeatureView> {
    (0..data.len())
        .map(|i| lossaudit::predictors::FeatureView {
            level: ViewLevel::InputAware,
            prediction: preds[i],
            input_features: Some(data.row(i).to_vec()),
            representation: None,
            repr_source: None,
        })
        .collect()
}

#[test]
fn criterion_07_lipschitz_basis() {
    let start = Instant::now();
    for (eps, expect_d) in [(0.5, 5usize), (0.2, 11), (0.1, 21)] {
        let basis = lipschitz_basis(eps).unwrap();
        assert_eq!(basis.d(), expect_d, "d formula at eps {eps}");
        for seed in 0..100u64 {
            let loss = sample_lipschitz_loss(seed, 64);
            let fit = basis_fit(&basis, |v| loss.superderivative(v), true)
                .unwrap_or_else(|e| panic!("eps {eps} seed {seed}: {e}"));
            assert!(fit.sup_error <= eps, "eps {eps} seed {seed}");
            assert!(fit.coefficient_norm <= 4.0, "eps {eps} seed {seed}");
        }
    }
    pass(
        7,
        start.elapsed().as_secs_f64(),
        30.0,
        "d = ceil(2/eps + 1); 100 sampled losses per eps fit within eps at norm <= 4",
    );
}

#[test]
fn criterion_08_basis_mce_transfer() {
    let start = Instant::now();
    let epsilon = 0.2;
    let basis = lipschitz_basis(epsilon).unwrap();
    for seed in 0..50u64 {
        let inst = random_instance(seed);
        let views = feature_views(inst.level, &inst.predictor, &inst.data).unwrap();
        let n = inst.data.len() as f64;
        let residuals: Vec<f64> = (0..inst.data.len())
            .map(|i| f64::from(inst.data.label(i)) - views[i].prediction)
            .collect();
        let a_cols: Vec<Vec<f64>> = inst
            .f_class
            .iter()
            .map(|f| views.iter().map(|v| f.predict(v).unwrap()).collect())
            .collect();
        let mut mce_basis = 0.0f64;
        for a_col in &a_cols {
            for j in 0..basis.d() {
                let corr: f64 = (0..views.len())
                    .map(|i| a_col[i] * basis.eval(j, views[i].prediction) * residuals[i])
                    .sum::<f64>()
                    / n;
                mce_basis = mce_basis.max(corr.abs());
            }
        }
        for loss_seed in 0..50u64 {
            let loss = sample_lipschitz_loss(7000 + loss_seed, 64);
            let mut mce_loss = 0.0f64;
            for a_col in &a_cols {
                let corr: f64 = (0..views.len())
                    .map(|i| {
                        a_col[i] * loss.superderivative(views[i].prediction) * residuals[i]
                    })
                    .sum::<f64>()
                    / n;
                mce_loss = mce_loss.max(corr.abs());
            }
            assert!(
                mce_loss <= 4.0 * mce_basis + epsilon + 1e-9,
                "seed {seed}/{loss_seed}: {mce_loss} > 4 * {mce_basis} + {epsilon}"
            );
        }
    }
    pass(
        8,
        start.elapsed().as_secs_f64(),
        60.0,
        "MCE against superderivatives <= 4 * basis MCE + eps across 50 x 50 instances",
    );
}

#[test]
fn criterion_09_certificate_and_improvement() {
    let start = Instant::now();
    let bound = 16.0 * SUITE_ALPHA + 4.0 * SUITE_EPSILON;
    let mut miscalibrated_runs = 0usize;
    for seed in 0..SUITE_SEEDS {
        let data = suite_data(seed);
        let cfg = LipschitzMcConfig {
            alpha: SUITE_ALPHA,
            epsilon: SUITE_EPSILON,
            level: ViewLevel::InputAware,
            thresholds_per_coord: 8,
            panel_size: 20,
            panel_seed: 9000 + seed,
            panel_pieces: 64,
            sampling: WalSampling::Reuse,
        };
        let (_, cert, trace) = mc_all_lipschitz(&data, &cfg).unwrap();
        assert!(trace.rounds.len() <= 400, "seed {seed}");
        assert!(
            cert.panel_max_advantage <= bound + 1e-9,
            "seed {seed}: panel advantage {} > bound",
            cert.panel_max_advantage
        );

        // Pre-boost comparison against the constant-1/2 starting point.
        let basis = lipschitz_basis(SUITE_EPSILON).unwrap();
        let panel: Vec<ProperLoss> = (0..cfg.panel_size)
            .map(|i| sample_lipschitz_loss(cfg.panel_seed + i as u64, cfg.panel_pieces))
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
        )
        .unwrap();
        if trace.rounds.is_empty() {
            // The starting point already passed the audit: the input is not
            // miscalibrated at this alpha and the predictor is unchanged.
            assert_eq!(cert.panel_max_advantage, pre_adv, "seed {seed}");
        } else {
            miscalibrated_runs += 1;
            assert!(
                cert.panel_max_advantage < pre_adv,
                "seed {seed}: panel advantage {} did not decrease from {pre_adv}",
                cert.panel_max_advantage
            );
        }
    }
    assert!(
        miscalibrated_runs >= 15,
        "only {miscalibrated_runs} of 20 suite runs exercised the improvement clause"
    );
    pass(
        9,
        start.elapsed().as_secs_f64(),
        180.0,
        "panel advantage <= 16a + 4e on all 20 runs and strictly below the pre-boost level on miscalibrated inputs",
    );
}

#[test]
fn criterion_10_swap_optimality() {
    let start = Instant::now();
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
    for case in 0..200 {
        let n_actions = rng.random_range(1..=4usize);
        let n_rows = rng.random_range(1..=12usize);
        let loss = GeneralLoss::new(
            "rand",
            (0..n_actions).map(|a| format!("a{a}")).collect(),
            (0..n_actions)
                .map(|_| [rng.random_range(0.0..=1.0), rng.random_range(0.0..=1.0)])
                .collect(),
        )
        .unwrap();
        let labels: Vec<u8> = (0..n_rows).map(|_| rng.random_range(0..=1u8)).collect();
        let data = Dataset::new(
            vec!["x0".into()],
            (0..n_rows).map(|i| vec![i as f64]).collect(),
            labels,
            Default::default(),
            None,
            lossaudit_cli::test_provenance("acceptance-swap"),
        )
        .unwrap();
        let assignment: Vec<usize> = (0..n_rows)
            .map(|_| rng.random_range(0..n_actions))
            .collect();
        let h = |x: &[f64]| assignment[x[0] as usize];
        let fast = swap_audit(h, &loss, &data).unwrap();
        let brute = swap_optimal_brute_force(h, &loss, &data).unwrap();
        assert_eq!(fast.is_swap_optimal, brute, "case {case}");
    }

    // Properization of the absolute-error loss, exact on the 1/256 grid.
    let proper = properize(&GeneralLoss::l1()).unwrap();
    for i in 0..=256u32 {
        let v = f64::from(i) / 256.0;
        assert_eq!(proper.entropy(v), v.min(1.0 - v), "H({v})");
    }
    pass(
        10,
        start.elapsed().as_secs_f64(),
        30.0,
        "swap audit agrees with brute force on 200 instances; properized l1 entropy exact",
    );
}

#[test]
fn criterion_11_blind_spot() {
    let start = Instant::now();
    let sq = ProperLoss::squared();
    assert_eq!(sq.blind_spots(1e-3, 1e-6), vec![0.5]);
    for seed in 0..10u64 {
        let data = synth_generate(
            &SynthSpec {
                n: 900,
                d: 3,
                form: SynthForm::Logistic,
                theta: 0.0,
            },
            3000 + seed,
        )
        .unwrap();
        let (train, test) = lossaudit::split(&data, (0.5, 0.5), seed).unwrap();
        let p = Predictor::Constant { value: 0.5 };
        let tol = 3.0 / (test.len() as f64).sqrt();
        for algo in [
            LpAlgo::StumpEnsemble(StumpParams {
                rounds: 60,
                shrinkage: 0.25,
            }),
            LpAlgo::Ridge { lambda: 1e-3 },
        ] {
            let lp =
                lossaudit::train_loss_predictor(&algo, &sq, &p, ViewLevel::InputAware, &train)
                    .unwrap();
            let rep = advantage(&lp, &sq, &p, &test).unwrap();
            assert!(
                rep.advantage <= tol,
                "seed {seed} {}: advantage {} above the statistical tolerance {tol}",
                algo.name(),
                rep.advantage
            );
        }
    }
    pass(
        11,
        start.elapsed().as_secs_f64(),
        30.0,
        "no trained predictor beats the self-estimate at the squared loss's blind spot",
    );
}

#[test]
fn criterion_12_trend_reproduction() {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        seed: 11,
        n: 6000,
        d: 4,
        thetas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
        families: vec![
            lossaudit::ModelSpec::Logistic(Default::default()),
            lossaudit::ModelSpec::Tree(lossaudit::predictors::TreeParams {
                max_depth: 3,
                min_leaf: 20,
            }),
            lossaudit::ModelSpec::StumpEnsemble(StumpParams {
                rounds: 150,
                shrinkage: 0.25,
            }),
        ],
        lp_algorithms: vec![
            LpAlgo::StumpEnsemble(StumpParams {
                rounds: 150,
                shrinkage: 0.25,
            }),
            LpAlgo::Ridge { lambda: 1e-3 },
        ],
        loss: LossConfig::Named("squared".into()),
        level: ViewLevel::InputAware,
        split: (0.5, 0.5),
        blend_target: 0.9,
        bandwidth: 0.1,
    };
    let dir = tempfile::tempdir().unwrap();
    let rep = run_experiment(&cfg, dir.path()).unwrap();
    assert!(
        rep.spearman_rho > 0.0,
        "Spearman rho {} not positive",
        rep.spearman_rho
    );
    assert!(
        rep.sign_concordance >= 0.8,
        "sign concordance {} below 0.8",
        rep.sign_concordance
    );
    assert!(
        rep.theta0_max_abs_advantage <= rep.noise_tolerance,
        "theta=0 advantage {} above the noise tolerance {}",
        rep.theta0_max_abs_advantage,
        rep.noise_tolerance
    );
    assert!(dir.path().join("tables/fig1.csv").exists());
    assert!(dir.path().join("tables/fig2.csv").exists());
    assert!(dir.path().join("plots/fig1.svg").exists());
    assert!(dir.path().join("plots/fig2.svg").exists());
    pass(
        12,
        start.elapsed().as_secs_f64(),
        300.0,
        &format!(
            "rho {:.3} > 0, concordance {:.3} >= 0.8, theta=0 advantage within noise",
            rep.spearman_rho, rep.sign_concordance
        ),
    );
}

#[test]
fn criterion_13_byte_determinism() {
    let start = Instant::now();
    let bin = env!("CARGO_BIN_EXE_lossaudit");
    let dir = tempfile::tempdir().unwrap();

    let audit_cfg = serde_json::json!({
        "seed": 7,
        "dataset": {"synth": {"n": 400, "d": 3, "form": "logistic", "theta": 0.5}},
        "split": [0.5, 0.5],
        "predictor": {"family": {"logistic": {"learning_rate": 0.1, "iterations": 200}},
                       "blend": {"theta": null, "target": 0.9}},
        "loss": "squared",
        "level": "input-aware",
        "lp_algorithm": {"stump-ensemble": {"rounds": 40, "shrinkage": 0.25}}
    });
    let basis_cfg = serde_json::json!({"seed": 3, "epsilon": 0.2, "n_losses": 30, "pieces": 64});
    let boost_cfg = serde_json::json!({
        "seed": 5,
        "dataset": {"synth": {"n": 500, "d": 3, "form": "logistic", "theta": 0.0}},
        "alpha": 0.15, "epsilon": 0.4, "level": "input-aware",
        "thresholds_per_coord": 6, "panel_size": 8, "panel_pieces": 64
    });
    let exp_cfg = serde_json::json!({
        "seed": 2,
        "n": 600, "d": 3,
        "thetas": [0.0, 1.0],
        "families": [
            {"logistic": {"learning_rate": 0.1, "iterations": 200}},
            {"tree": {"max_depth": 3, "min_leaf": 20}},
            {"stump-ensemble": {"rounds": 40, "shrinkage": 0.25}}
        ],
        "lp_algorithms": [
            {"stump-ensemble": {"rounds": 40, "shrinkage": 0.25}},
            {"ridge": {"lambda": 0.001}}
        ],
        "loss": "squared",
        "level": "input-aware",
        "blend_target": 0.9
    });

    let cases = [
        ("audit", audit_cfg),
        ("basis-check", basis_cfg),
        ("boost", boost_cfg),
        ("experiment", exp_cfg),
    ];
    for (cmd, cfg) in &cases {
        let cfg_path = dir.path().join(format!("{cmd}.json"));
        std::fs::write(&cfg_path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
        let out_a = dir.path().join(format!("{cmd}-a"));
        let out_b = dir.path().join(format!("{cmd}-b"));
        for out in [&out_a, &out_b] {
            let status = std::process::Command::new(bin)
                .args([
                    cmd,
                    "--config",
                    cfg_path.to_str().unwrap(),
                    "--out",
                    out.to_str().unwrap(),
                ])
                .status()
                .unwrap();
            assert!(status.success(), "{cmd} run failed");
        }
        assert_identical(&out_a.join("report.json"), &out_b.join("report.json"));
        for table in ["fig1.csv", "fig2.csv"] {
            let a = out_a.join("tables").join(table);
            if a.exists() {
                assert_identical(&a, &out_b.join("tables").join(table));
            }
        }
    }
    pass(
        13,
        start.elapsed().as_secs_f64(),
        300.0,
        "reruns of audit, basis-check, boost, experiment produced byte-identical reports and tables",
    );
}

fn assert_identical(a: &Path, b: &Path) {
    let ba = std::fs::read(a).unwrap_or_else(|e| panic!("{}: {e}", a.display()));
    let bb = std::fs::read(b).unwrap_or_else(|e| panic!("{}: {e}", b.display()));
    assert!(
        ba == bb,
        "{} and {} differ ({} vs {} bytes)",
        a.display(),
        b.display(),
        ba.len(),
        bb.len()
    );
}
