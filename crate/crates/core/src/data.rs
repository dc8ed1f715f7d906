//! Datasets: CSV ingestion, synthetic generation with a known Bayes
//! predictor, named subgroup masks, and seeded splits.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a dataset came from; enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub seed: Option<u64>,
    /// Miscalibration knob recorded by the synthetic generator; consumed by
    /// the harness when degrading base predictors.
    pub theta: Option<f64>,
}

/// Examples with real feature vectors, binary labels, and named boolean
/// subgroup masks. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    feature_names: Vec<String>,
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
    subgroups: BTreeMap<String, Vec<bool>>,
    p_star: Option<Vec<f64>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<u8>,
        subgroups: BTreeMap<String, Vec<bool>>,
        p_star: Option<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = features.len();
        if labels.len() != n {
            return Err(Error::Data(format!(
                "{n} feature rows but {} labels",
                labels.len()
            )));
        }
        let d = feature_names.len();
        for (i, row) in features.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Data(format!(
                    "row {i} has {} features, expected {d}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data(format!("row {i} contains a non-finite value")));
            }
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::Label("labels must be 0 or 1".into()));
        }
        for (name, mask) in &subgroups {
            if mask.len() != n {
                return Err(Error::Data(format!(
                    "mask `{name}` has length {}, expected {n}",
                    mask.len()
                )));
            }
        }
        if let Some(ps) = &p_star {
            if ps.len() != n {
                return Err(Error::Data("p_star length mismatch".into()));
            }
            if ps.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Data("p_star values must lie in [0, 1]".into()));
            }
        }
        Ok(Self {
            feature_names,
            features,
            labels,
            subgroups,
            p_star,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.iter().map(|r| r.as_slice())
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&y| f64::from(y)).collect()
    }

    pub fn subgroups(&self) -> &BTreeMap<String, Vec<bool>> {
        &self.subgroups
    }

    pub fn mask(&self, name: &str) -> Option<&[bool]> {
        self.subgroups.get(name).map(|m| m.as_slice())
    }

    pub fn p_star(&self) -> Option<&[f64]> {
        self.p_star.as_deref()
    }

    /// Restricts the dataset to the rows selected by `keep`.
    pub fn select(&self, keep: &[usize]) -> Self {
        Self {
            feature_names: self.feature_names.clone(),
            features: keep.iter().map(|&i| self.features[i].clone()).collect(),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            subgroups: self
                .subgroups
                .iter()
                .map(|(k, m)| (k.clone(), keep.iter().map(|&i| m[i]).collect()))
                .collect(),
            p_star: self
                .p_star
                .as_ref()
                .map(|ps| keep.iter().map(|&i| ps[i]).collect()),
            provenance: self.provenance.clone(),
        }
    }

    /// Rows for which `mask[i]` holds.
    pub fn filter_mask(&self, mask: &[bool]) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| mask[i]).collect();
        self.select(&keep)
    }
}

/// Subgroup membership rule: `column = value` or `column in {values}`,
/// matched against the raw (pre-encoding) cell text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubgroupSpec {
    pub name: String,
    pub column: String,
    pub values: Vec<String>,
}

/// Column layout for [`load_csv`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label: String,
    pub features: Vec<String>,
    #[serde(default)]
    pub subgroups: Vec<SubgroupSpec>,
}

/// Loads an RFC-4180-style CSV with a header row.
///
/// Numeric columns parse as reals; any column with a non-numeric cell is
/// one-hot encoded in lexicographic category order. Empty cells are
/// rejected (no imputation). The label column must parse to exactly 0 or 1.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Schema(format!("cannot read header: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let col_index = |name: &str| -> Result<usize> {
        let hits: Vec<usize> = headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.as_str() == name)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            [] => Err(Error::Schema(format!("missing column `{name}`"))),
            _ => Err(Error::Schema(format!("duplicated column `{name}`"))),
        }
    };

    let label_col = col_index(&schema.label)?;
    let feature_cols: Vec<usize> = schema
        .features
        .iter()
        .map(|f| col_index(f))
        .collect::<Result<_>>()?;
    for sg in &schema.subgroups {
        col_index(&sg.column)?;
    }

    let mut records: Vec<csv::StringRecord> = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: idx + 2,
            column: "<record>".into(),
            msg: e.to_string(),
        })?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Data("CSV contains no data rows".into()));
    }

    let cell = |rec: &csv::StringRecord, col: usize, line: usize| -> Result<String> {
        let raw = rec.get(col).ok_or_else(|| Error::Parse {
            line,
            column: headers[col].clone(),
            msg: "row too short".into(),
        })?;
        let s = raw.trim().to_string();
        if s.is_empty() {
            return Err(Error::Parse {
                line,
                column: headers[col].clone(),
                msg: "empty cell (missing values are rejected)".into(),
            });
        }
        Ok(s)
    };

    // Labels.
    let mut labels = Vec::with_capacity(records.len());
    for (idx, rec) in records.iter().enumerate() {
        let line = idx + 2;
        let s = cell(rec, label_col, line)?;
        let v: f64 = s.parse().map_err(|_| Error::Label(format!(
            "line {line}: label `{s}` is not numeric"
        )))?;
        if v == 0.0 {
            labels.push(0u8);
        } else if v == 1.0 {
            labels.push(1u8);
        } else {
            return Err(Error::Label(format!(
                "line {line}: label {v} is not binary"
            )));
        }
    }

    // Features: decide numeric vs categorical per column.
    let mut feature_names: Vec<String> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for &col in &feature_cols {
        let mut raw: Vec<String> = Vec::with_capacity(records.len());
        for (idx, rec) in records.iter().enumerate() {
            raw.push(cell(rec, col, idx + 2)?);
        }
        let numeric: Option<Vec<f64>> = raw
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect();
        match numeric {
            Some(vals) => {
                feature_names.push(headers[col].clone());
                columns.push(vals);
            }
            None => {
                let mut cats: Vec<String> = raw.clone();
                cats.sort();
                cats.dedup();
                for cat in &cats {
                    feature_names.push(format!("{}={cat}", headers[col]));
                    columns.push(raw.iter().map(|s| f64::from(u8::from(s == cat))).collect());
                }
            }
        }
    }

    let n = records.len();
    let features: Vec<Vec<f64>> = (0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();

    // Subgroup masks from raw cell text.
    let mut subgroups = BTreeMap::new();
    for sg in &schema.subgroups {
        let col = col_index(&sg.column)?;
        let mut mask = Vec::with_capacity(n);
        for (idx, rec) in records.iter().enumerate() {
            let s = cell(rec, col, idx + 2)?;
            mask.push(sg.values.iter().any(|v| v == &s));
        }
        subgroups.insert(sg.name.clone(), mask);
    }

    Dataset::new(
        feature_names,
        features,
        labels,
        subgroups,
        None,
        Provenance {
            source: path.as_ref().display().to_string(),
            seed: None,
            theta: None,
        },
    )
}

/// Writes a dataset so that reloading it through [`roundtrip_schema`]
/// reproduces features, labels, and masks exactly.
pub fn write_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["label".to_string()];
    header.extend(data.feature_names().iter().cloned());
    header.extend(data.subgroups().keys().cloned());
    writer.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec = vec![data.label(i).to_string()];
        rec.extend(data.row(i).iter().map(|x| format!("{x}")));
        rec.extend(
            data.subgroups()
                .values()
                .map(|m| if m[i] { "1" } else { "0" }.to_string()),
        );
        writer.write_record(&rec)?;
    }
    writer.flush()?;
    Ok(())
}

/// Schema that reloads the output of [`write_csv`].
pub fn roundtrip_schema(data: &Dataset) -> CsvSchema {
    CsvSchema {
        label: "label".into(),
        features: data.feature_names().to_vec(),
        subgroups: data
            .subgroups()
            .keys()
            .map(|name| SubgroupSpec {
                name: name.clone(),
                column: name.clone(),
                values: vec!["1".into()],
            })
            .collect(),
    }
}

/// How the synthetic generator draws features and the Bayes predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthForm {
    /// Standard-normal features, `p*(x) = sigmoid(w . x)` with seeded `w`.
    Logistic,
    /// Features in `{-1, +1}^d` with an independent `p*` value per cell;
    /// the natural playground for table predictors. Requires `d <= 12`.
    DiscreteGrid,
}

/// Parameters for [`synth_generate`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n: usize,
    pub d: usize,
    pub form: SynthForm,
    /// Miscalibration knob in `[0, 1]`; recorded in provenance for the
    /// harness, which blends base predictors toward a constant by `theta`.
    pub theta: f64,
}

/// Generates a synthetic dataset with known `p*`, labels `y ~ Ber(p*(x))`,
/// and four subgroups given by the sign pattern of the first two features.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    if spec.n == 0 {
        return Err(Error::Config("synthetic n must be >= 1".into()));
    }
    if spec.d < 2 {
        return Err(Error::Config(
            "synthetic d must be >= 2 (subgroups use the first two features)".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.theta) {
        return Err(Error::Config(format!(
            "theta {} outside [0, 1]",
            spec.theta
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let (features, p_star): (Vec<Vec<f64>>, Vec<f64>) = match spec.form {
        SynthForm::Logistic => {
            let w: Vec<f64> = (0..spec.d)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    2.0 * g / (spec.d as f64).sqrt()
                })
                .collect();
            let mut feats = Vec::with_capacity(spec.n);
            let mut ps = Vec::with_capacity(spec.n);
            for _ in 0..spec.n {
                let x: Vec<f64> = (0..spec.d)
                    .map(|_| StandardNormal.sample(&mut rng))
                    .collect();
                let z: f64 = w.iter().zip(&x).map(|(wi, xi)| wi * xi).sum();
                ps.push(1.0 / (1.0 + (-z).exp()));
                feats.push(x);
            }
            (feats, ps)
        }
        SynthForm::DiscreteGrid => {
            if spec.d > 12 {
                return Err(Error::Config(
                    "discrete-grid synthetic data requires d <= 12".into(),
                ));
            }
            let cells = 1usize << spec.d;
            let table: Vec<f64> = (0..cells).map(|_| rng.random_range(0.05..=0.95)).collect();
            let mut feats = Vec::with_capacity(spec.n);
            let mut ps = Vec::with_capacity(spec.n);
            for _ in 0..spec.n {
                let mut key = 0usize;
                let x: Vec<f64> = (0..spec.d)
                    .map(|j| {
                        let bit = rng.random_range(0.0..1.0) < 0.5;
                        if bit {
                            key |= 1 << j;
                        }
                        if bit {
                            1.0
                        } else {
                            -1.0
                        }
                    })
                    .collect();
                ps.push(table[key]);
                feats.push(x);
            }
            (feats, ps)
        }
    };

    let labels: Vec<u8> = p_star
        .iter()
        .map(|&p| u8::from(rng.random_range(0.0..1.0) < p))
        .collect();

    let mut subgroups = BTreeMap::new();
    for (name, f0_pos, f1_pos) in [
        ("x0+x1+", true, true),
        ("x0+x1-", true, false),
        ("x0-x1+", false, true),
        ("x0-x1-", false, false),
    ] {
        let mask: Vec<bool> = features
            .iter()
            .map(|row| (row[0] >= 0.0) == f0_pos && (row[1] >= 0.0) == f1_pos)
            .collect();
        subgroups.insert(name.to_string(), mask);
    }

    let feature_names = (0..spec.d).map(|j| format!("x{j}")).collect();
    Dataset::new(
        feature_names,
        features,
        labels,
        subgroups,
        Some(p_star),
        Provenance {
            source: format!("synth:{:?}:n{}:d{}", spec.form, spec.n, spec.d),
            seed: Some(seed),
            theta: Some(spec.theta),
        },
    )
}

/// Seeded permutation split into `(train, test)` with the given fractions.
pub fn split(data: &Dataset, fractions: (f64, f64), seed: u64) -> Result<(Dataset, Dataset)> {
    let (a, b) = fractions;
    if a <= 0.0 || b <= 0.0 || (a + b - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split fractions ({a}, {b}) must be positive and sum to 1"
        )));
    }
    let n = data.len();
    if n < 2 {
        return Err(Error::Config("cannot split fewer than 2 rows".into()));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let n_train = ((n as f64 * a).round() as usize).clamp(1, n - 1);
    let train = data.select(&idx[..n_train]);
    let test = data.select(&idx[n_train..]);
    Ok((train, test))
}
