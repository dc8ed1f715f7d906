//! General (possibly non-proper) losses over a finite action space:
//! optimal-action post-processing, properization via the lower envelope,
//! latent predictor extraction, and the swap-optimality audit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::losses::ProperLoss;

/// Upper bound on the action count, covering both hand-listed actions and
/// discretized intervals.
const MAX_ACTIONS: usize = 1024;

/// Default grid when discretizing the interval `[0, 1]` of actions.
pub const DEFAULT_ACTION_GRID: usize = 257;

/// A loss `l: {0,1} x A -> [0, 1]` over a finite action space, stored as a
/// per-action table. Serializes as the action table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralLoss {
    pub name: String,
    actions: Vec<String>,
    /// `table[a] = [l(0, a), l(1, a)]`.
    table: Vec<[f64; 2]>,
}

impl GeneralLoss {
    pub fn new(name: impl Into<String>, actions: Vec<String>, table: Vec<[f64; 2]>) -> Result<Self> {
        if actions.is_empty() || actions.len() != table.len() {
            return Err(Error::Config(format!(
                "need matched nonempty actions/table, got {}/{}",
                actions.len(),
                table.len()
            )));
        }
        if actions.len() > MAX_ACTIONS {
            return Err(Error::Config(format!(
                "{} actions exceed the supported maximum {MAX_ACTIONS}",
                actions.len()
            )));
        }
        for (a, row) in table.iter().enumerate() {
            for &v in row {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Range(format!(
                        "loss entry {v} for action {a} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            actions,
            table,
        })
    }

    /// The absolute-error loss on the two actions `{0, 1}`; its optimal
    /// post-processing rounds the prediction.
    pub fn l1() -> Self {
        Self::new(
            "l1",
            vec!["0".into(), "1".into()],
            vec![[0.0, 1.0], [1.0, 0.0]],
        )
        .expect("static table is valid")
    }

    /// Discretizes a proper loss onto a uniform grid of prediction actions.
    pub fn from_proper_on_grid(loss: &ProperLoss, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Config("need at least 2 grid actions".into()));
        }
        let mut actions = Vec::with_capacity(points);
        let mut table = Vec::with_capacity(points);
        for i in 0..points {
            let v = i as f64 / (points - 1) as f64;
            actions.push(format!("{v}"));
            table.push([loss.eval(0, v)?, loss.eval(1, v)?]);
        }
        Self::new(format!("grid-{}", loss.name), actions, table)
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn action_name(&self, a: usize) -> &str {
        &self.actions[a]
    }

    pub fn loss(&self, y: u8, a: usize) -> f64 {
        self.table[a][usize::from(y)]
    }

    /// Expected loss of action `a` when `y ~ Ber(v)`.
    pub fn expected(&self, v: f64, a: usize) -> f64 {
        v * self.table[a][1] + (1.0 - v) * self.table[a][0]
    }
}

/// The optimal action under `y ~ Ber(v)`; ties break to the lowest index.
pub fn optimal_action(loss: &GeneralLoss, v: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Domain(format!("v={v} outside [0, 1]")));
    }
    let mut best = 0usize;
    let mut best_val = loss.expected(v, 0);
    for a in 1..loss.n_actions() {
        let val = loss.expected(v, a);
        if val < best_val {
            best = a;
            best_val = val;
        }
    }
    Ok(best)
}

/// Properization `l . k_l`: the entropy of the induced proper loss is the
/// lower envelope of the per-action expected-loss lines, computed exactly.
pub fn properize(loss: &GeneralLoss) -> Result<ProperLoss> {
    // Line for action a: v -> intercept + slope * v.
    let lines: Vec<(f64, f64)> = (0..loss.n_actions())
        .map(|a| (loss.table[a][0], loss.table[a][1] - loss.table[a][0]))
        .collect();

    // Active line at v = 0: minimal intercept, then minimal slope.
    let mut current = 0usize;
    for (i, &(c, s)) in lines.iter().enumerate() {
        let (bc, bs) = lines[current];
        if c < bc - 0.0 || (c == bc && s < bs) {
            current = i;
        }
    }

    let mut breakpoints = vec![0.0];
    let mut values = vec![lines[current].0];
    let mut v_cur = 0.0f64;
    loop {
        let (c_cur, s_cur) = lines[current];
        // Earliest crossing with a lower-slope line strictly ahead of us.
        let mut next: Option<(f64, usize)> = None;
        for (i, &(c, s)) in lines.iter().enumerate() {
            if s >= s_cur - 1e-15 {
                continue;
            }
            let v_star = (c - c_cur) / (s_cur - s);
            if v_star <= v_cur + 1e-12 || v_star >= 1.0 - 1e-12 {
                continue;
            }
            let better = match next {
                None => true,
                Some((bv, bi)) => {
                    v_star < bv - 1e-15 || (v_star <= bv + 1e-15 && s < lines[bi].1)
                }
            };
            if better {
                next = Some((v_star, i));
            }
        }
        match next {
            Some((v_star, i)) => {
                breakpoints.push(v_star);
                values.push(c_cur + s_cur * v_star);
                v_cur = v_star;
                current = i;
            }
            None => {
                breakpoints.push(1.0);
                values.push(c_cur + s_cur);
                break;
            }
        }
    }
    ProperLoss::piecewise(format!("properized-{}", loss.name), breakpoints, values)
}

/// The latent predictor `p_h(x) = mean of y among rows with h(x') = h(x)`,
/// with realized-group sizes for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPredictor {
    /// `action -> (mean label, group size)`.
    pub by_action: BTreeMap<usize, (f64, usize)>,
}

impl LatentPredictor {
    pub fn value(&self, action: usize) -> Option<f64> {
        self.by_action.get(&action).map(|&(v, _)| v)
    }
}

/// Builds the latent predictor of a hypothesis on the dataset.
pub fn latent_predictor(
    h: impl Fn(&[f64]) -> usize,
    data: &Dataset,
) -> Result<LatentPredictor> {
    if data.is_empty() {
        return Err(Error::Data("latent predictor needs at least one row".into()));
    }
    let mut sums: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for i in 0..data.len() {
        let a = h(data.row(i));
        let e = sums.entry(a).or_insert((0.0, 0));
        e.0 += f64::from(data.label(i));
        e.1 += 1;
    }
    Ok(LatentPredictor {
        by_action: sums
            .into_iter()
            .map(|(a, (s, c))| (a, (s / c as f64, c)))
            .collect(),
    })
}

/// Verdict of the per-action best-response audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapAudit {
    pub is_swap_optimal: bool,
    /// Best response per realized action; `Some` only when not optimal.
    pub improving_kappa: Option<BTreeMap<usize, usize>>,
    /// Expected per-row loss reduction of the best relabeling.
    pub gain: f64,
    /// Rows per realized action.
    pub group_sizes: BTreeMap<usize, usize>,
}

/// Audits `h` for swap optimality under `loss` on the data: for every
/// realized action, compares it against the best response to the group's
/// label mean. `h` is swap optimal exactly when no switch strictly reduces
/// the expected loss; this matches best-responding to the latent predictor.
pub fn swap_audit(
    h: impl Fn(&[f64]) -> usize,
    loss: &GeneralLoss,
    data: &Dataset,
) -> Result<SwapAudit> {
    let latent = latent_predictor(&h, data)?;
    let n = data.len() as f64;
    let mut gain = 0.0;
    let mut kappa = BTreeMap::new();
    let mut group_sizes = BTreeMap::new();
    for (&action, &(mean_y, count)) in &latent.by_action {
        if action >= loss.n_actions() {
            return Err(Error::Config(format!(
                "hypothesis emitted action {action} outside the table"
            )));
        }
        group_sizes.insert(action, count);
        let current = loss.expected(mean_y, action);
        let mut best = action;
        let mut best_val = current;
        for a in 0..loss.n_actions() {
            let val = loss.expected(mean_y, a);
            if val < best_val {
                best = a;
                best_val = val;
            }
        }
        kappa.insert(action, best);
        gain += (count as f64 / n) * (current - best_val);
    }
    let is_swap_optimal = gain <= 0.0;
    Ok(SwapAudit {
        is_swap_optimal,
        improving_kappa: (!is_swap_optimal).then_some(kappa),
        gain,
        group_sizes,
    })
}

/// Brute-force swap-optimality check: enumerates every relabeling
/// `kappa: A -> A`. Exponential in the action count; the independent
/// oracle for [`swap_audit`] on small instances.
pub fn swap_optimal_brute_force(
    h: impl Fn(&[f64]) -> usize,
    loss: &GeneralLoss,
    data: &Dataset,
) -> Result<bool> {
    let k = loss.n_actions();
    let n = data.len();
    let actions: Vec<usize> = (0..n).map(|i| h(data.row(i))).collect();
    let current: f64 = (0..n)
        .map(|i| loss.loss(data.label(i), actions[i]))
        .sum::<f64>()
        / n as f64;
    let maps = (k as u64).pow(k as u32);
    for code in 0..maps {
        let mut kappa = Vec::with_capacity(k);
        let mut c = code;
        for _ in 0..k {
            kappa.push((c % k as u64) as usize);
            c /= k as u64;
        }
        let relabeled: f64 = (0..n)
            .map(|i| loss.loss(data.label(i), kappa[actions[i]]))
            .sum::<f64>()
            / n as f64;
        if relabeled < current - 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}
