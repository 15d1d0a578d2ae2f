//! Multimodal datasets, file loaders, stratified splitting and standardization.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::codec::{Decoder, Encoder};
use crate::error::{Error, Result};
use crate::Label;

/// Timesteps per robot instance.
pub const ROBOT_STEPS: usize = 15;
/// Features per SPECTF modality.
pub const SPECTF_FEATURES: usize = 22;

const DUMP_MAGIC: &[u8; 4] = b"MDSD";

/// Feature matrices (features × items) for every modality, plus per-item labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalDataset {
    pub modality_names: Vec<String>,
    pub x: Vec<DMatrix<f64>>,
    pub labels: Vec<Label>,
    /// Original class name of each item, used for stratification.
    pub classes: Vec<String>,
    pub item_ids: Vec<String>,
}

impl ModalDataset {
    pub fn new(
        modality_names: Vec<String>,
        x: Vec<DMatrix<f64>>,
        labels: Vec<Label>,
        classes: Vec<String>,
        item_ids: Vec<String>,
    ) -> Result<Self> {
        let ds = Self {
            modality_names,
            x,
            labels,
            classes,
            item_ids,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Checks the shape invariants.
    pub fn validate(&self) -> Result<()> {
        if self.x.is_empty() || self.x.len() != self.modality_names.len() {
            return Err(Error::InvalidInput(format!(
                "{} modality names for {} matrices",
                self.modality_names.len(),
                self.x.len()
            )));
        }
        let n = self.labels.len();
        for xm in &self.x {
            if xm.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: xm.ncols(),
                });
            }
        }
        if self.classes.len() != n || self.item_ids.len() != n {
            return Err(Error::InvalidInput("per-item metadata length mismatch".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn modalities(&self) -> usize {
        self.x.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.x.iter().map(|m| m.nrows()).collect()
    }

    pub fn target_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_target()).count()
    }

    pub fn outlier_count(&self) -> usize {
        self.len() - self.target_count()
    }

    /// Feature vectors of item `i`, one per modality.
    pub fn item(&self, i: usize) -> Vec<DVector<f64>> {
        self.x.iter().map(|xm| xm.column(i).into_owned()).collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            modality_names: self.modality_names.clone(),
            x: self.x.iter().map(|xm| xm.select_columns(idx)).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            classes: idx.iter().map(|&i| self.classes[i].clone()).collect(),
            item_ids: idx.iter().map(|&i| self.item_ids[i].clone()).collect(),
        }
    }

    pub fn target_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i].is_target()).collect()
    }

    pub fn targets(&self) -> Self {
        self.subset(&self.target_indices())
    }

    /// All modalities stacked into one feature matrix.
    pub fn concatenated(&self) -> Self {
        let rows: usize = self.dims().iter().sum();
        let mut x = DMatrix::zeros(rows, self.len());
        let mut offset = 0;
        for xm in &self.x {
            x.rows_mut(offset, xm.nrows()).copy_from(xm);
            offset += xm.nrows();
        }
        Self {
            modality_names: vec![self.modality_names.join("+")],
            x: vec![x],
            ..self.clone()
        }
    }

    pub fn single_modality(&self, m: usize) -> Self {
        Self {
            modality_names: vec![self.modality_names[m].clone()],
            x: vec![self.x[m].clone()],
            ..self.clone()
        }
    }

    pub fn encode(&self, enc: &mut Encoder) {
        enc.usize(self.modalities());
        for (name, xm) in self.modality_names.iter().zip(&self.x) {
            enc.str(name).matrix(xm);
        }
        enc.usize(self.len());
        for i in 0..self.len() {
            enc.bool(self.labels[i].is_target())
                .str(&self.classes[i])
                .str(&self.item_ids[i]);
        }
    }

    pub fn decode(dec: &mut Decoder<'_>) -> Result<Self> {
        let m = dec.usize()?;
        let mut names = Vec::new();
        let mut x = Vec::new();
        for _ in 0..m {
            names.push(dec.string()?);
            x.push(dec.matrix()?);
        }
        let n = dec.usize()?;
        let (mut labels, mut classes, mut ids) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..n {
            labels.push(if dec.bool()? { Label::Target } else { Label::Outlier });
            classes.push(dec.string()?);
            ids.push(dec.string()?);
        }
        Self::new(names, x, labels, classes, ids)
    }

    /// Binary dump; [`ModalDataset::from_dump`] restores it bit-exactly.
    pub fn to_dump(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.bytes(DUMP_MAGIC);
        self.encode(&mut enc);
        enc.finish()
    }

    pub fn from_dump(bytes: &[u8]) -> Result<Self> {
        let mut dec = Decoder::new(bytes);
        if dec.take(4)? != DUMP_MAGIC {
            return Err(Error::Decode("not a dataset dump".into()));
        }
        let ds = Self::decode(&mut dec)?;
        if !dec.is_empty() {
            return Err(Error::Decode(format!("{} trailing bytes", dec.remaining())));
        }
        Ok(ds)
    }
}

/// The five robot execution failure problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LearningProblem {
    Lp1,
    Lp2,
    Lp3,
    Lp4,
    Lp5,
}

impl LearningProblem {
    pub const ALL: [LearningProblem; 5] = [Self::Lp1, Self::Lp2, Self::Lp3, Self::Lp4, Self::Lp5];

    pub fn default_target(self) -> &'static str {
        match self {
            Self::Lp3 => "ok",
            _ => "normal",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.data", self.to_string().to_ascii_lowercase())
    }
}

impl fmt::Display for LearningProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = Self::ALL.iter().position(|p| p == self).unwrap_or(0) + 1;
        write!(f, "LP{i}")
    }
}

impl FromStr for LearningProblem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        Self::ALL
            .iter()
            .copied()
            .find(|p| p.to_string() == t)
            .ok_or_else(|| Error::InvalidParams(format!("unknown learning problem {s:?}")))
    }
}

fn parse_robot_row(line: &str, line_no: usize) -> Result<[f64; 6]> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(Error::Parse {
            line: line_no,
            message: format!("expected 6 integers, found {} fields", fields.len()),
        });
    }
    let mut out = [0.0; 6];
    for (o, f) in out.iter_mut().zip(&fields) {
        let v: i64 = f.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("{f:?} is not an integer"),
        })?;
        *o = v as f64;
    }
    Ok(out)
}

fn looks_numeric(line: &str) -> bool {
    line.split_whitespace()
        .next()
        .is_some_and(|t| t.parse::<f64>().is_ok())
}

/// Parses robot execution failure text.
///
/// Each block is a class-name line followed by 15 lines of `Fx Fy Fz Tx Ty Tz`.
/// Features are time-major: the force vector is `(Fx₁, Fy₁, Fz₁, Fx₂, …)`.
pub fn parse_robot(text: &str, target_label: &str, id_prefix: &str) -> Result<ModalDataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
        .peekable();
    let mut force_cols: Vec<f64> = Vec::new();
    let mut torque_cols: Vec<f64> = Vec::new();
    let mut classes = Vec::new();
    let mut last_line = 0;

    while let Some((line_no, line)) = lines.next() {
        if looks_numeric(line) || line.split_whitespace().count() != 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected a class name, found {line:?}"),
            });
        }
        classes.push(line.to_string());
        for step in 0..ROBOT_STEPS {
            let Some((row_no, row)) = lines.next() else {
                return Err(Error::Parse {
                    line: last_line.max(line_no) + 1,
                    message: format!("instance {:?} ends after {step} of {ROBOT_STEPS} rows", line),
                });
            };
            last_line = row_no;
            let v = parse_robot_row(row, row_no)?;
            force_cols.extend_from_slice(&v[..3]);
            torque_cols.extend_from_slice(&v[3..]);
        }
    }

    let n = classes.len();
    if n == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "no instances found".into(),
        });
    }
    if !classes.iter().any(|c| c == target_label) {
        return Err(Error::UnknownLabel(target_label.to_string()));
    }
    let dim = 3 * ROBOT_STEPS;
    let labels = classes
        .iter()
        .map(|c| if c == target_label { Label::Target } else { Label::Outlier })
        .collect();
    let ids = (0..n).map(|i| format!("{id_prefix}-{:04}", i + 1)).collect();
    ModalDataset::new(
        vec!["force".into(), "torque".into()],
        vec![
            DMatrix::from_vec(dim, n, force_cols),
            DMatrix::from_vec(dim, n, torque_cols),
        ],
        labels,
        classes,
        ids,
    )
}

/// Loads `path`, using the problem's default target class unless one is given.
pub fn load_robot(path: &Path, problem: LearningProblem, target_label: Option<&str>) -> Result<ModalDataset> {
    let text = fs::read_to_string(path)?;
    let target = target_label.unwrap_or(problem.default_target());
    parse_robot(&text, target, &problem.to_string().to_ascii_lowercase())
}

/// Column order of the 44 SPECTF features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectfLayout {
    /// `F1R, F1S, F2R, F2S, …` as in the distributed UCI files.
    #[default]
    Interleaved,
    /// 22 rest columns followed by 22 stress columns.
    Blocked,
}

/// Parses SPECTF rows: diagnosis (1 healthy target, 0 pathological), then 44 features.
pub fn parse_spectf(text: &str, layout: SpectfLayout, id_prefix: &str) -> Result<ModalDataset> {
    let expected = 1 + 2 * SPECTF_FEATURES;
    let mut rest = Vec::new();
    let mut stress = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != expected {
            return Err(Error::ColumnCount {
                line: line_no,
                expected,
                found: fields.len(),
            });
        }
        let label = match fields[0] {
            "1" => Label::Target,
            "0" => Label::Outlier,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("diagnosis must be 0 or 1, found {other:?}"),
                })
            }
        };
        let values = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("{f:?} is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        for k in 0..SPECTF_FEATURES {
            let (r, s) = match layout {
                SpectfLayout::Interleaved => (values[2 * k], values[2 * k + 1]),
                SpectfLayout::Blocked => (values[k], values[SPECTF_FEATURES + k]),
            };
            rest.push(r);
            stress.push(s);
        }
        labels.push(label);
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "no rows found".into(),
        });
    }
    let classes = labels
        .iter()
        .map(|l| if l.is_target() { "healthy" } else { "pathological" }.to_string())
        .collect();
    let ids = (0..n).map(|i| format!("{id_prefix}-{:04}", i + 1)).collect();
    ModalDataset::new(
        vec!["rest".into(), "stress".into()],
        vec![
            DMatrix::from_vec(SPECTF_FEATURES, n, rest),
            DMatrix::from_vec(SPECTF_FEATURES, n, stress),
        ],
        labels,
        classes,
        ids,
    )
}

pub fn load_spectf(train: &Path, test: &Path, layout: SpectfLayout) -> Result<(ModalDataset, ModalDataset)> {
    let tr = parse_spectf(&fs::read_to_string(train)?, layout, "train")?;
    let te = parse_spectf(&fs::read_to_string(test)?, layout, "test")?;
    if tr.target_count() == 0 {
        return Err(Error::UnknownLabel("healthy".into()));
    }
    Ok((tr, te))
}

/// Disjoint train/test item indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

fn group_by_class<'a>(idx: impl Iterator<Item = usize>, classes: &'a [String]) -> BTreeMap<&'a str, Vec<usize>> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for i in idx {
        groups.entry(classes[i].as_str()).or_default().push(i);
    }
    groups
}

/// Puts `round(fraction · n_c)` items of every class into the training set.
pub fn stratified_split(classes: &[String], fraction: f64, seed: u64) -> Result<SplitPlan> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParams(format!("split fraction {fraction} not in (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in group_by_class(0..classes.len(), classes) {
        if members.len() < 2 {
            return Err(Error::TooFewItems(format!(
                "class {class:?} has {} item(s), a split needs 2",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        let n = members.len();
        let k = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
        train.extend_from_slice(&members[..k]);
        test.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan {
        seed,
        train_idx: train,
        test_idx: test,
    })
}

/// Stratified k-fold partition of `train_idx`, as `(fit, validation)` pairs.
///
/// Items of each class are shuffled and dealt round-robin, the dealing
/// position carrying over between classes so fold sizes differ by at most one.
pub fn cv_folds(train_idx: &[usize], classes: &[String], k: usize, seed: u64) -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
    if k < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 folds, got {k}")));
    }
    if train_idx.len() < k {
        return Err(Error::TooFewItems(format!(
            "{} training items for {k} folds",
            train_idx.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (_, mut members) in group_by_class(train_idx.iter().copied(), classes) {
        members.shuffle(&mut rng);
        for i in members {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    Ok(folds
        .iter()
        .map(|val| {
            let mut val = val.clone();
            val.sort_unstable();
            let mut fit: Vec<usize> = train_idx.iter().copied().filter(|i| val.binary_search(i).is_err()).collect();
            fit.sort_unstable();
            (fit, val)
        })
        .collect())
}

/// Per-feature z-scoring fitted on one dataset and reapplied to others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<DVector<f64>>,
    /// Population standard deviations; zero marks a constant feature.
    pub stds: Vec<DVector<f64>>,
}

impl Standardizer {
    /// Fits on every item of `data`.
    pub fn fit(data: &ModalDataset) -> Self {
        let n = data.len().max(1) as f64;
        let mut means = Vec::new();
        let mut stds = Vec::new();
        for xm in &data.x {
            let mean = if data.is_empty() {
                DVector::zeros(xm.nrows())
            } else {
                xm.column_mean()
            };
            let mut std = DVector::zeros(xm.nrows());
            for r in 0..xm.nrows() {
                let var = xm.row(r).iter().map(|v| (v - mean[r]).powi(2)).sum::<f64>() / n;
                let s = var.sqrt();
                std[r] = if s <= 1e-12 * mean[r].abs().max(1.0) { 0.0 } else { s };
            }
            means.push(mean);
            stds.push(std);
        }
        Self { means, stds }
    }

    pub fn transform_vector(&self, m: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (mean, std) = (&self.means[m], &self.stds[m]);
        if x.len() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: x.len(),
            });
        }
        Ok(DVector::from_fn(x.len(), |r, _| {
            if std[r] == 0.0 {
                0.0
            } else {
                (x[r] - mean[r]) / std[r]
            }
        }))
    }

    pub fn transform(&self, data: &ModalDataset) -> Result<ModalDataset> {
        if data.modalities() != self.means.len() {
            return Err(Error::DimensionMismatch {
                expected: self.means.len(),
                found: data.modalities(),
            });
        }
        let mut out = data.clone();
        for (m, xm) in out.x.iter_mut().enumerate() {
            for c in 0..xm.ncols() {
                let col = self.transform_vector(m, &xm.column(c).into_owned())?;
                xm.set_column(c, &col);
            }
        }
        Ok(out)
    }
}

/// Fits on the target items of `train` and transforms `apply_to`.
pub fn standardize(train: &ModalDataset, apply_to: &ModalDataset) -> Result<(ModalDataset, Standardizer)> {
    let st = Standardizer::fit(&train.targets());
    Ok((st.transform(apply_to)?, st))
}

/// Shape of a generated multimodal dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub dims: Vec<usize>,
    pub targets: usize,
    pub outliers: usize,
    /// Dimension of the latent factor shared by all modalities.
    pub latent: usize,
    pub noise: f64,
    /// Noise level of outliers; above `noise` they leave the target manifold.
    pub outlier_noise: f64,
    /// Distance of the outlier latent mean from the origin.
    pub shift: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            dims: vec![6, 5],
            targets: 30,
            outliers: 15,
            latent: 3,
            noise: 0.1,
            outlier_noise: 1.0,
            shift: 3.0,
            seed: 0,
        }
    }
}

/// Gaussian latent-factor data: every modality is a fixed random linear
/// image of a shared latent vector plus isotropic noise. Outliers draw
/// their latent vector around a shifted mean and carry `outlier_noise`.
pub fn synthetic(spec: &SyntheticSpec) -> Result<ModalDataset> {
    if spec.dims.is_empty() || spec.targets == 0 || spec.latent == 0 {
        return Err(Error::InvalidParams("synthetic spec needs modalities, targets and a latent dimension".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
    let maps: Vec<DMatrix<f64>> = spec
        .dims
        .iter()
        .map(|&d| DMatrix::from_fn(d, spec.latent, |_, _| normal(&mut rng)))
        .collect();
    let mut direction = DVector::from_fn(spec.latent, |_, _| normal(&mut rng));
    direction /= direction.norm().max(f64::MIN_POSITIVE);
    let n = spec.targets + spec.outliers;
    let mut x: Vec<DMatrix<f64>> = spec.dims.iter().map(|&d| DMatrix::zeros(d, n)).collect();
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let target = i < spec.targets;
        let mut z = DVector::from_fn(spec.latent, |_, _| normal(&mut rng));
        if !target {
            z += &direction * spec.shift;
        }
        for (xm, a) in x.iter_mut().zip(&maps) {
            let level = if target { spec.noise } else { spec.outlier_noise };
            let noise = DVector::from_fn(a.nrows(), |_, _| normal(&mut rng) * level);
            xm.set_column(i, &(a * &z + noise));
        }
        labels.push(if target { Label::Target } else { Label::Outlier });
    }
    let classes = labels
        .iter()
        .map(|l| if l.is_target() { "target" } else { "outlier" }.to_string())
        .collect();
    ModalDataset::new(
        (0..spec.dims.len()).map(|m| format!("m{}", m + 1)).collect(),
        x,
        labels,
        classes,
        (0..n).map(|i| format!("syn-{:04}", i + 1)).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(class: &str, base: i64) -> String {
        let mut s = format!("{class}\n");
        for t in 0..15 {
            let v: Vec<String> = (0..6).map(|c| (base + 10 * t + c).to_string()).collect();
            s.push_str(&format!("\t{}\n", v.join("\t")));
        }
        s.push('\n');
        s
    }

    #[test]
    fn robot_block_features_are_time_major() {
        let ds = parse_robot(&block("normal", 0), "normal", "t").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.dims(), vec![45, 45]);
        for t in 0..15 {
            for c in 0..3 {
                assert_eq!(ds.x[0][(3 * t + c, 0)], (10 * t + c) as f64);
                assert_eq!(ds.x[1][(3 * t + c, 0)], (10 * t + c + 3) as f64);
            }
        }
    }

    #[test]
    fn robot_errors() {
        let text = block("normal", 0) + &block("collision", 5);
        let ds = parse_robot(&text, "normal", "t").unwrap();
        assert_eq!(ds.labels, vec![Label::Target, Label::Outlier]);
        assert!(matches!(parse_robot(&text, "ok", "t"), Err(Error::UnknownLabel(_))));

        let bad = text.replacen("\t12\t13", "\tx\t13", 1);
        match parse_robot(&bad, "normal", "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let truncated: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(matches!(parse_robot(&truncated, "normal", "t"), Err(Error::Parse { .. })));
    }

    #[test]
    fn spectf_row_split() {
        let row: Vec<String> = std::iter::once("1".to_string()).chain((1..=44).map(|v| v.to_string())).collect();
        let text = row.join(",");
        let blocked = parse_spectf(&text, SpectfLayout::Blocked, "t").unwrap();
        assert_eq!(blocked.x[0].column(0).iter().copied().collect::<Vec<_>>(), (1..=22).map(f64::from).collect::<Vec<_>>());
        assert_eq!(blocked.x[1][(0, 0)], 23.0);
        let inter = parse_spectf(&text, SpectfLayout::Interleaved, "t").unwrap();
        assert_eq!(inter.x[0][(1, 0)], 3.0);
        assert_eq!(inter.x[1][(1, 0)], 4.0);
        assert_eq!(inter.labels, vec![Label::Target]);

        assert!(matches!(
            parse_spectf("1,2,3", SpectfLayout::Blocked, "t"),
            Err(Error::ColumnCount { found: 3, .. })
        ));
        let bad_label = text.replacen('1', "2", 1);
        assert!(matches!(parse_spectf(&bad_label, SpectfLayout::Blocked, "t"), Err(Error::Parse { .. })));
    }

    fn two_class(a: usize, b: usize) -> Vec<String> {
        (0..a + b).map(|i| if i < a { "p".into() } else { "q".into() }).collect()
    }

    #[test]
    fn split_counts_and_determinism() {
        let classes = two_class(10, 10);
        let plan = stratified_split(&classes, 0.7, 3).unwrap();
        assert_eq!(plan.train_idx.len(), 14);
        assert_eq!(plan.train_idx.iter().filter(|&&i| i < 10).count(), 7);
        assert_eq!(plan, stratified_split(&classes, 0.7, 3).unwrap());
        let plans: Vec<_> = (0..5).map(|s| stratified_split(&classes, 0.7, s).unwrap()).collect();
        for (i, a) in plans.iter().enumerate() {
            for b in &plans[i + 1..] {
                assert_ne!(a.train_idx, b.train_idx);
            }
        }
        assert!(matches!(stratified_split(&two_class(1, 5), 0.7, 0), Err(Error::TooFewItems(_))));
    }

    #[test]
    fn folds_partition_training_items() {
        let classes = two_class(12, 9);
        let plan = stratified_split(&classes, 0.7, 1).unwrap();
        let folds = cv_folds(&plan.train_idx, &classes, 5, 9).unwrap();
        let mut seen: Vec<usize> = folds.iter().flat_map(|(_, v)| v.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, plan.train_idx);
        for (fit, val) in &folds {
            assert_eq!(fit.len() + val.len(), plan.train_idx.len());
            assert!(fit.iter().all(|i| !val.contains(i)));
            let p = val.iter().filter(|&&i| classes[i] == "p").count();
            assert!((1..=2).contains(&p), "{val:?}");
        }
        assert!(cv_folds(&plan.train_idx[..3], &classes, 5, 0).is_err());
    }

    #[test]
    fn standardizer_behaviour() {
        let x = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 3.0, 4.0, 0.1, 0.1, 0.1, 0.1]);
        let ds = ModalDataset::new(
            vec!["a".into()],
            vec![x],
            vec![Label::Target; 4],
            vec!["t".into(); 4],
            (0..4).map(|i| i.to_string()).collect(),
        )
        .unwrap();
        let (z, st) = standardize(&ds, &ds).unwrap();
        assert_eq!(st.stds[0][1], 0.0);
        assert!(z.x[0].row(1).iter().all(|&v| v == 0.0));
        let row = z.x[0].row(0);
        let mean = row.mean();
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
        let (again, _) = standardize(&z, &z).unwrap();
        assert!((&again.x[0] - &z.x[0]).amax() < 1e-12);
    }

    #[test]
    fn dump_round_trip_is_bit_exact() {
        let ds = synthetic(&SyntheticSpec::default()).unwrap();
        let back = ModalDataset::from_dump(&ds.to_dump()).unwrap();
        assert_eq!(back, ds);
        for (a, b) in ds.x.iter().zip(&back.x) {
            assert!(a.iter().zip(b.iter()).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }
}
