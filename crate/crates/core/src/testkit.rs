//! Fixture builders for tests and benchmarks: small random instances
//! pairing a miscalibrated predictor with a class of stump loss
//! predictors.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Provenance};
use crate::loss_prediction::{LossPredictor, LpModel};
use crate::losses::{sample_lipschitz_loss, ProperLoss};
use crate::predictors::{Predictor, Stump, StumpEnsemble, ViewLevel};

pub struct Instance {
    pub data: Dataset,
    pub predictor: Predictor,
    pub loss: ProperLoss,
    pub f_class: Vec<LossPredictor>,
    pub level: ViewLevel,
}

/// A stump-form loss predictor over the flattened view coordinates,
/// taking value `low` below the threshold and `high` at or above it.
pub fn stump_lp(
    loss: &ProperLoss,
    level: ViewLevel,
    view_dim: usize,
    coord: usize,
    threshold: f64,
    low: f64,
    high: f64,
) -> LossPredictor {
    LossPredictor {
        level,
        loss: loss.clone(),
        model: LpModel::StumpRegressor(StumpEnsemble::from_parts(
            low,
            vec![(
                Stump {
                    feature: coord,
                    threshold,
                    left_value: 0.0,
                    right_value: high - low,
                },
                1.0,
            )],
            view_dim,
        )),
    }
}

/// Small random instance: up to 16 rows, a miscalibrated stump-ensemble
/// predictor, a random proper loss, and up to 4 stump loss predictors.
pub fn random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=16usize);
    let d = 2usize;
    let features: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect();
    let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1u8)).collect();
    let data = Dataset::new(
        (0..d).map(|j| format!("x{j}")).collect(),
        features,
        labels,
        BTreeMap::new(),
        None,
        Provenance {
            source: format!("random-instance-{seed}"),
            seed: Some(seed),
            theta: None,
        },
    )
    .expect("valid instance data");

    // Arbitrary (typically miscalibrated) predictor built from two stumps.
    let predictor = Predictor::StumpEnsemble(StumpEnsemble::from_parts(
        rng.random_range(0.0..=1.0),
        (0..2)
            .map(|_| {
                (
                    Stump {
                        feature: rng.random_range(0..d),
                        threshold: rng.random_range(-1.0..=1.0),
                        left_value: rng.random_range(-0.5..=0.5),
                        right_value: rng.random_range(-0.5..=0.5),
                    },
                    1.0,
                )
            })
            .collect(),
        d,
    ));

    let loss = match seed % 3 {
        0 => ProperLoss::squared(),
        1 => ProperLoss::half_squared(),
        _ => sample_lipschitz_loss(seed, 32),
    };

    let level = if seed.is_multiple_of(2) {
        ViewLevel::PredictionOnly
    } else {
        ViewLevel::InputAware
    };
    let view_dim = match level {
        ViewLevel::PredictionOnly => 1,
        _ => 1 + d,
    };
    let n_f = rng.random_range(1..=4usize);
    let f_class: Vec<LossPredictor> = (0..n_f)
        .map(|_| {
            let coord = rng.random_range(0..view_dim);
            let threshold = if coord == 0 {
                rng.random_range(0.0..=1.0)
            } else {
                rng.random_range(-1.0..=1.0)
            };
            stump_lp(
                &loss,
                level,
                view_dim,
                coord,
                threshold,
                rng.random_range(0.0..=1.0),
                rng.random_range(0.0..=1.0),
            )
        })
        .collect();

    Instance {
        data,
        predictor,
        loss,
        f_class,
        level,
    }
}
