//! Command-level behavior: the documented audit scenarios, CSV-backed
//! runs, exit codes, and the report summarizer.

use std::path::Path;
use std::process::Command;

use lossaudit::predictors::ViewLevel;
use lossaudit_cli::{
    run_audit, run_boost, run_train_lp, summarize_report, AuditConfig, BlendConfig,
    BoostCommandConfig, DatasetConfig, LossConfig, PredictorConfig,
};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_lossaudit")
}

fn synth_cfg(n: usize, d: usize, form: &str, theta: f64) -> DatasetConfig {
    serde_json::from_value(serde_json::json!({
        "synth": {"n": n, "d": d, "form": form, "theta": theta}
    }))
    .unwrap()
}

#[test]
fn audit_on_calibrated_table_shows_no_advantage() {
    let cfg = AuditConfig {
        seed: 12,
        dataset: synth_cfg(3000, 3, "discrete-grid", 0.0),
        split: (0.5, 0.5),
        predictor: PredictorConfig {
            family: lossaudit::ModelSpec::Table,
            blend: None,
        },
        loss: LossConfig::Named("squared".into()),
        level: ViewLevel::InputAware,
        lp_algorithm: lossaudit::LpAlgo::StumpEnsemble(lossaudit::predictors::StumpParams {
            rounds: 80,
            shrinkage: 0.25,
        }),
        bins: 10,
        bandwidth: 0.1,
    };
    let dir = tempfile::tempdir().unwrap();
    let rep = run_audit(&cfg, dir.path()).unwrap();
    let noise = 3.0 / (rep.n_test as f64).sqrt();
    assert!(
        rep.advantage.advantage.abs() <= noise,
        "advantage {} beyond noise {noise}",
        rep.advantage.advantage
    );
    assert!(rep.witness_correlation.abs() <= noise);
    assert!(rep.witness_bound_holds);
    assert!(!rep.blind_spot_warning);
    assert!(dir.path().join("predictor.json").exists());
    assert!(dir.path().join("loss_predictor.json").exists());
}

#[test]
fn audit_constant_09_on_all_zero_labels() {
    // CSV fixture: every label 0; the constant-0.9 predictor's loss is
    // 0.81 on each row while its self-estimate says 0.09.
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("zeros.csv");
    let mut body = String::from("y,x0\n");
    for i in 0..200 {
        body.push_str(&format!("0,{}\n", i % 7));
    }
    std::fs::write(&csv_path, body).unwrap();

    let cfg = AuditConfig {
        seed: 1,
        dataset: DatasetConfig::Csv {
            path: csv_path.display().to_string(),
            schema: serde_json::from_value(serde_json::json!({
                "label": "y", "features": ["x0"], "subgroups": []
            }))
            .unwrap(),
        },
        split: (0.5, 0.5),
        predictor: PredictorConfig {
            family: lossaudit::ModelSpec::Constant { value: 0.9 },
            blend: None,
        },
        loss: LossConfig::Named("squared".into()),
        level: ViewLevel::InputAware,
        lp_algorithm: lossaudit::LpAlgo::Constant,
        bins: 10,
        bandwidth: 0.1,
    };
    let out = dir.path().join("run");
    let rep = run_audit(&cfg, &out).unwrap();
    assert!((rep.advantage.advantage - 0.5184).abs() < 1e-9);
    assert!((rep.witness_correlation - 0.5184).abs() < 1e-9);
    assert!(rep.witness_bound_holds);
}

#[test]
fn audit_at_blind_spot_warns_and_gains_nothing() {
    let cfg = AuditConfig {
        seed: 4,
        dataset: synth_cfg(2000, 3, "logistic", 0.0),
        split: (0.5, 0.5),
        predictor: PredictorConfig {
            family: lossaudit::ModelSpec::Constant { value: 0.5 },
            blend: None,
        },
        loss: LossConfig::Named("squared".into()),
        level: ViewLevel::InputAware,
        lp_algorithm: lossaudit::LpAlgo::StumpEnsemble(Default::default()),
        bins: 10,
        bandwidth: 0.1,
    };
    let dir = tempfile::tempdir().unwrap();
    let rep = run_audit(&cfg, dir.path()).unwrap();
    assert!(rep.advantage.advantage <= 0.0);
    assert!(rep.blind_spot_warning, "p = 1/2 must trigger the warning");
    assert_eq!(rep.mean_abs_superderivative, 0.0);
}

#[test]
fn train_lp_writes_the_model() {
    let cfg = AuditConfig {
        seed: 6,
        dataset: synth_cfg(600, 3, "logistic", 0.4),
        split: (0.5, 0.5),
        predictor: PredictorConfig {
            family: lossaudit::ModelSpec::Logistic(Default::default()),
            blend: Some(BlendConfig {
                theta: None,
                target: 0.9,
            }),
        },
        loss: LossConfig::Named("half-squared".into()),
        level: ViewLevel::InputAware,
        lp_algorithm: lossaudit::LpAlgo::Ridge { lambda: 1e-3 },
        bins: 10,
        bandwidth: 0.1,
    };
    let dir = tempfile::tempdir().unwrap();
    let rep = run_train_lp(&cfg, dir.path()).unwrap();
    assert_eq!(rep.kind, "train-lp");
    let lp: lossaudit::LossPredictor = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("loss_predictor.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(lp.algorithm(), "ridge");
    let summary = summarize_report(dir.path()).unwrap();
    assert!(summary.contains("train-lp"));
}

#[test]
fn boost_report_summarizes() {
    let cfg = BoostCommandConfig {
        seed: 2,
        dataset: synth_cfg(400, 3, "logistic", 0.0),
        alpha: 0.2,
        epsilon: 0.5,
        level: ViewLevel::InputAware,
        thresholds_per_coord: 4,
        panel_size: 5,
        panel_pieces: 64,
    };
    let dir = tempfile::tempdir().unwrap();
    let rep = run_boost(&cfg, dir.path()).unwrap();
    assert!(rep.bound_holds);
    let trace = std::fs::read_to_string(dir.path().join("trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), rep.certificate.rounds);
    let summary = summarize_report(dir.path()).unwrap();
    assert!(summary.contains("boost"));
}

#[test]
fn binary_rejects_bad_config_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(&cfg_path, "{\"seed\": \"not a number\"}").unwrap();
    let status = Command::new(bin())
        .args([
            "audit",
            "--config",
            cfg_path.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn binary_seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bc.json");
    std::fs::write(
        &cfg_path,
        serde_json::to_string(&serde_json::json!({
            "seed": 1, "epsilon": 0.5, "n_losses": 5, "pieces": 32
        }))
        .unwrap(),
    )
    .unwrap();
    let run = |out: &Path, seed: Option<&str>| {
        let mut args = vec![
            "basis-check".to_string(),
            "--config".into(),
            cfg_path.display().to_string(),
            "--out".into(),
            out.display().to_string(),
        ];
        if let Some(s) = seed {
            args.push("--seed".into());
            args.push(s.into());
        }
        assert!(Command::new(bin()).args(&args).status().unwrap().success());
    };
    let out1 = dir.path().join("o1");
    let out2 = dir.path().join("o2");
    run(&out1, Some("99"));
    run(&out2, Some("99"));
    let r1 = std::fs::read(out1.join("report.json")).unwrap();
    let r2 = std::fs::read(out2.join("report.json")).unwrap();
    assert_eq!(r1, r2);
    // The resolved config records the overridden seed.
    let resolved: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out1.join("resolved_config.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(resolved["seed"], 99);
}

#[test]
fn basis_check_zero_losses_is_trivial_pass() {
    let cfg = lossaudit_cli::BasisCheckConfig {
        seed: 0,
        epsilon: 0.5,
        n_losses: 0,
        pieces: 32,
    };
    let dir = tempfile::tempdir().unwrap();
    let rep = lossaudit_cli::run_basis_check(&cfg, dir.path()).unwrap();
    assert!(rep.trivial);
    assert!(rep.ok);
    assert_eq!(rep.max_sup_error, 0.0);
}
