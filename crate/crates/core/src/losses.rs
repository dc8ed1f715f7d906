//! Proper losses for binary labels, represented through their concave
//! entropy function `H` and a superderivative `H'`.
//!
//! Every loss here satisfies the pointwise identity
//! `loss(y, v) = H(v) + (y - v) * H'(v)`, takes values in `[0, 1]`, and has
//! `H'` in `[-1, 1]`. The representation makes expected losses, pointwise
//! gaps and blind spots one-line computations.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for range overshoot caused by float rounding. Values further
/// outside `[0, 1]` than this are rejected instead of clamped.
pub const RANGE_TOL: f64 = 1e-9;

/// A concave piecewise-linear function on `[0, 1]` stored as breakpoints
/// and values. Serializes to/from `{"breakpoints": [...], "values": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseEntropy {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseEntropy {
    /// Builds and validates a piecewise-linear entropy.
    ///
    /// Requirements: breakpoints strictly increasing from 0 to 1, values in
    /// `[0, 1]`, segment slopes non-increasing (concavity) and within
    /// `[-1, 1]`, and the induced loss bounded in `[0, 1]`
    /// (`H(0) + H'(0) <= 1` and `H(1) - H'(1) <= 1`).
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return Err(Error::Domain(format!(
                "piecewise entropy needs k>=2 matched breakpoints/values, got {}/{}",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || breakpoints[breakpoints.len() - 1] != 1.0 {
            return Err(Error::Domain(
                "piecewise entropy must span exactly [0, 1]".into(),
            ));
        }
        for w in breakpoints.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Domain(
                    "piecewise entropy breakpoints must be strictly increasing".into(),
                ));
            }
        }
        for &v in &values {
            if !v.is_finite() || !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&v) {
                return Err(Error::Range(format!("entropy value {v} outside [0, 1]")));
            }
        }
        let pw = Self {
            breakpoints,
            values,
        };
        let slopes = pw.slopes();
        for w in slopes.windows(2) {
            if w[1] > w[0] + RANGE_TOL {
                return Err(Error::Range(
                    "piecewise entropy is not concave (slopes increase)".into(),
                ));
            }
        }
        for &s in &slopes {
            if s.abs() > 1.0 + RANGE_TOL {
                return Err(Error::Range(format!("entropy slope {s} outside [-1, 1]")));
            }
        }
        let l10 = pw.values[0] + slopes[0];
        let l01 = pw.values[pw.values.len() - 1] - slopes[slopes.len() - 1];
        if l10 > 1.0 + RANGE_TOL || l01 > 1.0 + RANGE_TOL {
            return Err(Error::Range(format!(
                "induced loss leaves [0, 1]: loss(1,0)={l10}, loss(0,1)={l01}"
            )));
        }
        Ok(pw)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Segment slopes, one per breakpoint interval.
    pub fn slopes(&self) -> Vec<f64> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(b, v)| (v[1] - v[0]) / (b[1] - b[0]))
            .collect()
    }

    /// Index of the segment whose half-open interval contains `v`.
    fn segment(&self, v: f64) -> usize {
        let k = self.breakpoints.len() - 1;
        match self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&v).unwrap())
        {
            Ok(i) => i.min(k - 1),
            Err(i) => i.saturating_sub(1).min(k - 1),
        }
    }

    pub fn value(&self, v: f64) -> f64 {
        let i = self.segment(v);
        let (b0, b1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        y0 + (v - b0) * (y1 - y0) / (b1 - b0)
    }

    /// Superderivative. Interior kinks return the average of the adjacent
    /// slopes; any value in the subdifferential is valid and the average is
    /// deterministic.
    pub fn slope(&self, v: f64) -> f64 {
        let slopes = self.slopes();
        // Exact hit on an interior breakpoint?
        if let Ok(i) = self
            .breakpoints
            .binary_search_by(|b| b.partial_cmp(&v).unwrap())
        {
            if i > 0 && i < self.breakpoints.len() - 1 {
                return 0.5 * (slopes[i - 1] + slopes[i]);
            }
        }
        slopes[self.segment(v)]
    }
}

/// The entropy representation backing a [`ProperLoss`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntropyForm {
    /// `H(v) = v(1 - v)`, the squared loss `(y - v)^2`.
    Squared,
    /// `H(v) = v(1 - v) / 2`; its entropy is 1-Lipschitz.
    HalfSquared,
    /// Cross-entropy with predictions clipped to `[eta, 1 - eta]`, extended
    /// linearly outside the clip window, and rescaled by `1 / ln(1/eta)` so
    /// the loss lands in `[0, 1]` and `H'` in `[-1, 1]`.
    ClippedCrossEntropy { eta: f64 },
    /// Arbitrary concave piecewise-linear entropy.
    PiecewiseLinear(PiecewiseEntropy),
}

/// A proper loss for binary labels, `loss: {0,1} x [0,1] -> [0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProperLoss {
    pub name: String,
    form: EntropyForm,
}

impl ProperLoss {
    pub fn squared() -> Self {
        Self {
            name: "squared".into(),
            form: EntropyForm::Squared,
        }
    }

    pub fn half_squared() -> Self {
        Self {
            name: "half-squared".into(),
            form: EntropyForm::HalfSquared,
        }
    }

    /// Clipped, rescaled cross-entropy with the default clip `eta = 0.01`.
    pub fn clipped_cross_entropy() -> Self {
        Self {
            name: "clipped-cross-entropy".into(),
            form: EntropyForm::ClippedCrossEntropy { eta: 0.01 },
        }
    }

    /// Wraps a validated piecewise-linear entropy.
    pub fn piecewise(name: impl Into<String>, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            form: EntropyForm::PiecewiseLinear(PiecewiseEntropy::new(breakpoints, values)?),
        })
    }

    pub fn form(&self) -> &EntropyForm {
        &self.form
    }

    /// The concave entropy `H(v)`.
    pub fn entropy(&self, v: f64) -> f64 {
        match &self.form {
            EntropyForm::Squared => v * (1.0 - v),
            EntropyForm::HalfSquared => 0.5 * v * (1.0 - v),
            EntropyForm::ClippedCrossEntropy { eta } => clipped_ce_entropy(*eta, v),
            EntropyForm::PiecewiseLinear(pw) => pw.value(v),
        }
    }

    /// A superderivative `H'(v)`, equal to `loss(1, v) - loss(0, v)`.
    pub fn superderivative(&self, v: f64) -> f64 {
        match &self.form {
            EntropyForm::Squared => 1.0 - 2.0 * v,
            EntropyForm::HalfSquared => 0.5 - v,
            EntropyForm::ClippedCrossEntropy { eta } => clipped_ce_slope(*eta, v),
            EntropyForm::PiecewiseLinear(pw) => pw.slope(v),
        }
    }

    /// Pointwise loss `loss(y, v) = H(v) + (y - v) H'(v)`.
    ///
    /// The raw formula value is clamped into `[0, 1]` when the overshoot is
    /// within [`RANGE_TOL`]; larger overshoots are an error.
    pub fn eval(&self, y: u8, v: f64) -> Result<f64> {
        check_prob("v", v)?;
        check_label(y)?;
        let raw = self.entropy(v) + (f64::from(y) - v) * self.superderivative(v);
        if !(-RANGE_TOL..=1.0 + RANGE_TOL).contains(&raw) {
            return Err(Error::Range(format!(
                "loss `{}` evaluated to {raw} at (y={y}, v={v})",
                self.name
            )));
        }
        Ok(raw.clamp(0.0, 1.0))
    }

    /// Expected loss when `y ~ Ber(p_star)` but we predict `v`:
    /// `H(v) + (p_star - v) H'(v)`.
    pub fn expected_loss(&self, p_star: f64, v: f64) -> Result<f64> {
        check_prob("p_star", p_star)?;
        check_prob("v", v)?;
        Ok(self.entropy(v) + (p_star - v) * self.superderivative(v))
    }

    /// Gap between the expected loss at `v` and the entropy at `v`:
    /// `(p_star - v) * H'(v)`.
    pub fn pointwise_gap(&self, p_star: f64, v: f64) -> Result<f64> {
        check_prob("p_star", p_star)?;
        check_prob("v", v)?;
        Ok((p_star - v) * self.superderivative(v))
    }

    /// Grid points where `|H'| <= tol`, i.e. where the realized loss does not
    /// depend on the label. A sign change of `H'` between adjacent grid
    /// points (both beyond `tol`) contributes the interpolated zero crossing,
    /// so kinks of piecewise-linear entropies are detected as well.
    pub fn blind_spots(&self, grid_step: f64, tol: f64) -> Vec<f64> {
        assert!(
            grid_step > 0.0 && grid_step <= 0.5,
            "grid_step must lie in (0, 0.5]"
        );
        assert!(tol >= 0.0, "tol must be non-negative");
        let mut grid: Vec<f64> = Vec::new();
        let mut i = 0u64;
        loop {
            let v = (i as f64) * grid_step;
            if v >= 1.0 {
                break;
            }
            grid.push(v);
            i += 1;
        }
        grid.push(1.0);

        let slopes: Vec<f64> = grid.iter().map(|&v| self.superderivative(v)).collect();
        let mut spots: Vec<f64> = Vec::new();
        for (idx, &v) in grid.iter().enumerate() {
            if slopes[idx].abs() <= tol {
                spots.push(v);
            }
        }
        for idx in 0..grid.len() - 1 {
            let (s0, s1) = (slopes[idx], slopes[idx + 1]);
            if s0 > tol && s1 < -tol {
                let t = grid[idx] + (grid[idx + 1] - grid[idx]) * s0 / (s0 - s1);
                spots.push(t);
            }
        }
        spots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        spots
    }
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) || !v.is_finite() {
        return Err(Error::Domain(format!("{name}={v} outside [0, 1]")));
    }
    Ok(())
}

fn check_label(y: u8) -> Result<()> {
    if y > 1 {
        return Err(Error::Domain(format!("label y={y} not in {{0, 1}}")));
    }
    Ok(())
}

fn binary_entropy(v: f64) -> f64 {
    let mut h = 0.0;
    if v > 0.0 {
        h -= v * v.ln();
    }
    if v < 1.0 {
        h -= (1.0 - v) * (1.0 - v).ln();
    }
    h
}

fn clipped_ce_entropy(eta: f64, v: f64) -> f64 {
    let scale = 1.0 / (1.0 / eta).ln();
    if v < eta {
        scale * (binary_entropy(eta) + (v - eta) * ((1.0 - eta) / eta).ln())
    } else if v > 1.0 - eta {
        scale * (binary_entropy(1.0 - eta) + (v - (1.0 - eta)) * (eta / (1.0 - eta)).ln())
    } else {
        scale * binary_entropy(v)
    }
}

fn clipped_ce_slope(eta: f64, v: f64) -> f64 {
    let scale = 1.0 / (1.0 / eta).ln();
    let clipped = v.clamp(eta, 1.0 - eta);
    scale * ((1.0 - clipped) / clipped).ln()
}

/// The built-in closed-form losses, in a stable order.
pub fn builtin_losses() -> Vec<ProperLoss> {
    vec![
        ProperLoss::squared(),
        ProperLoss::half_squared(),
        ProperLoss::clipped_cross_entropy(),
    ]
}

/// Samples a random proper loss whose entropy is piecewise linear on the
/// uniform knot grid `j / pieces` with non-increasing slopes in `[-1, 1]`.
///
/// Consecutive slopes differ by at most `2 / pieces`, so the superderivative
/// varies slowly enough for the threshold basis of
/// [`crate::mc_boost::lipschitz_basis`] to fit it, and the entropy itself is
/// 1-Lipschitz. The entropy offset is chosen in the middle of the interval
/// that keeps the induced loss inside `[0, 1]`; that interval is provably
/// nonempty under the slope-decrement cap.
pub fn sample_lipschitz_loss(seed: u64, pieces: usize) -> ProperLoss {
    assert!(pieces >= 1, "pieces must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_step = 2.0 / pieces as f64;

    let mut slopes = Vec::with_capacity(pieces);
    let mut s: f64 = rng.random_range(-1.0..=1.0);
    slopes.push(s);
    for _ in 1..pieces {
        s = (s - rng.random_range(0.0..=max_step)).max(-1.0);
        slopes.push(s);
    }

    let width = 1.0 / pieces as f64;
    let mut integral = Vec::with_capacity(pieces + 1);
    integral.push(0.0);
    let mut acc = 0.0;
    for &sl in &slopes {
        acc += sl * width;
        integral.push(acc);
    }

    let r_end = acc;
    let lo = (0.0f64).max(-r_end);
    let hi = (1.0 - slopes[0]).min(1.0 + slopes[pieces - 1] - r_end);
    let offset = 0.5 * (lo + hi);

    let breakpoints: Vec<f64> = (0..=pieces)
        .map(|j| if j == pieces { 1.0 } else { j as f64 * width })
        .collect();
    let values: Vec<f64> = integral
        .iter()
        .map(|r| (offset + r).clamp(0.0, 1.0))
        .collect();

    ProperLoss::piecewise(format!("lipschitz-s{seed}-k{pieces}"), breakpoints, values)
        .expect("sampled entropy must satisfy the proper-loss invariants")
}
