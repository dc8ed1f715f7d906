use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use lossaudit::loss_prediction::{train_loss_predictor, LpAlgo};
use lossaudit::mc_boost::{
    basis_fit, enumerate_weak_class, lipschitz_basis, product_class_mc, weak_agnostic_learn,
    WalConfig, WalSampling,
};
use lossaudit::multicalibration::{mce_finite, smoothed_ce_values, TestFunction};
use lossaudit::predictors::{feature_views, StumpParams, ViewLevel};
use lossaudit::{sample_lipschitz_loss, ModelSpec, Predictor, ProperLoss};
use lossaudit_bench::bench_data;

fn bench_loss_eval(c: &mut Criterion) {
    let losses = [
        ProperLoss::squared(),
        ProperLoss::clipped_cross_entropy(),
        sample_lipschitz_loss(3, 64),
    ];
    c.bench_function("eval_loss_1024_grid", |b| {
        b.iter(|| {
            let mut acc = 0.0;
            for loss in &losses {
                for i in 0..=1024 {
                    let v = i as f64 / 1024.0;
                    acc += loss.eval(1, v).unwrap() - loss.eval(0, v).unwrap();
                }
            }
            black_box(acc)
        })
    });
}

fn bench_smoothed_ce(c: &mut Criterion) {
    let data = bench_data(2000, 1);
    let p = Predictor::Constant { value: 0.5 };
    let preds = p.predict_all(&data).unwrap();
    c.bench_function("smoothed_ce_n2000", |b| {
        b.iter(|| black_box(smoothed_ce_values(&preds, data.labels(), 0.1)))
    });
}

fn bench_wal_scan(c: &mut Criterion) {
    let data = bench_data(2000, 2);
    let p = Predictor::Constant { value: 0.5 };
    let views = feature_views(ViewLevel::InputAware, &p, &data).unwrap();
    let z: Vec<f64> = data
        .labels()
        .iter()
        .map(|&y| f64::from(y) - 0.5)
        .collect();
    let cfg = WalConfig {
        thresholds_per_coord: 16,
        extra_curves: vec![],
    };
    let class = enumerate_weak_class(&views, &cfg);
    c.bench_function("wal_scan_n2000", |b| {
        b.iter(|| black_box(weak_agnostic_learn(&views, &z, &class, 0.1).unwrap()))
    });
}

fn bench_basis_fit(c: &mut Criterion) {
    let basis = lipschitz_basis(0.1).unwrap();
    let loss = sample_lipschitz_loss(7, 64);
    c.bench_function("basis_fit_eps01", |b| {
        b.iter(|| black_box(basis_fit(&basis, |v| loss.superderivative(v), true).unwrap()))
    });
}

fn bench_mce_finite(c: &mut Criterion) {
    let data = bench_data(2000, 4);
    let p = lossaudit::fit(
        &ModelSpec::StumpEnsemble(StumpParams {
            rounds: 50,
            shrinkage: 0.25,
        }),
        &data,
    )
    .unwrap();
    let class: Vec<TestFunction> = (0..64)
        .map(|i| TestFunction::Stump {
            coord: i % 5,
            threshold: (i as f64 / 64.0) * 2.0 - 1.0,
            sign: if i % 2 == 0 { 1.0 } else { -1.0 },
        })
        .collect();
    c.bench_function("mce_finite_64fns_n2000", |b| {
        b.iter(|| black_box(mce_finite(&class, &p, &data, ViewLevel::InputAware).unwrap()))
    });
}

fn bench_boosting(c: &mut Criterion) {
    let data = bench_data(1000, 5);
    let basis = lipschitz_basis(0.4).unwrap();
    let b_class = basis.as_test_functions();
    let cfg = WalConfig {
        thresholds_per_coord: 6,
        extra_curves: vec![],
    };
    c.bench_function("product_class_mc_n1000_alpha02", |b| {
        b.iter(|| {
            black_box(
                product_class_mc(
                    &data,
                    &data.labels_f64(),
                    &b_class,
                    &cfg,
                    ViewLevel::InputAware,
                    0.2,
                    WalSampling::Reuse,
                )
                .unwrap(),
            )
        })
    });
}

fn bench_train_lp(c: &mut Criterion) {
    let data = bench_data(2000, 6);
    let p = lossaudit::fit(
        &ModelSpec::Logistic(Default::default()),
        &data,
    )
    .unwrap();
    let loss = ProperLoss::squared();
    c.bench_function("train_lp_stumps_n2000", |b| {
        b.iter(|| {
            black_box(
                train_loss_predictor(
                    &LpAlgo::StumpEnsemble(StumpParams {
                        rounds: 50,
                        shrinkage: 0.25,
                    }),
                    &loss,
                    &p,
                    ViewLevel::InputAware,
                    &data,
                )
                .unwrap(),
            )
        })
    });
}

criterion_group!(
    benches,
    bench_loss_eval,
    bench_smoothed_ce,
    bench_wal_scan,
    bench_basis_fit,
    bench_mce_finite,
    bench_boosting,
    bench_train_lp
);
criterion_main!(benches);
