//! Full evaluation protocols: repeated stratified splits (robot, synthetic)
//! or the fixed train/test pair (SPECTF), each with CV model selection,
//! refit on the full training part and a single test evaluation.

use std::collections::BTreeMap;

use mssvdd::data::{self, cv_folds, stratified_split, ModalDataset, SyntheticSpec};
use mssvdd::metrics::{compute_metrics, fuse_labels, ConfusionCounts, MetricReport};
use mssvdd::model::{fit, fit_plain_svdd};
use mssvdd::{DecisionStrategy, HyperParams, Label, Omega, TrainedModel, Variant};
use serde::{Deserialize, Serialize};

use crate::config::{Baseline, DatasetKind, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::grid::{cells, grid_search, search, MonotonicityStats, SearchSpace};

pub const METHOD_MSSVDD: &str = "MS-SVDD";
pub const METHOD_SVDD: &str = "SVDD";
pub const METHOD_SSVDD: &str = "S-SVDD";

/// One evaluated configuration on one split, or a mean over splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    pub variant: Option<Variant>,
    pub omega: Option<Omega>,
    pub strategy: Option<DecisionStrategy>,
    pub d: Option<usize>,
    /// Selected hyperparameters; absent on summary rows.
    pub params: Option<HyperParams>,
    /// Test confusion counts; absent on summary rows.
    pub counts: Option<ConfusionCounts>,
    pub metrics: MetricReport,
    /// Split identifier, or `"mean"` for summary rows.
    pub split: String,
    pub cv_gmean: Option<f64>,
    /// Whether the final model was refit on the whole training part after selection.
    pub refit: bool,
    pub standardized: bool,
}

impl ResultRow {
    /// Key identifying the same configuration across splits.
    pub fn group_key(&self) -> (String, String, String, String, String) {
        (
            self.dataset.clone(),
            self.method.clone(),
            self.variant.map(|v| v.to_string()).unwrap_or_default(),
            self.omega.map(|o| o.to_string()).unwrap_or_default(),
            self.strategy.map(|s| s.to_string()).unwrap_or_default(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitFailure {
    pub split: String,
    pub message: String,
}

/// A model refit on the training part of the first split.
#[derive(Debug, Clone)]
pub struct SavedModel {
    pub name: String,
    pub model: TrainedModel,
}

#[derive(Debug)]
pub struct ProtocolOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<ResultRow>,
    pub failures: Vec<SplitFailure>,
    /// Evaluation batches checked for decision-strategy ordering.
    pub batches: usize,
    pub monotonicity_violations: usize,
    pub models: Vec<SavedModel>,
}

/// Loaded data in protocol form.
#[derive(Debug, Clone)]
pub enum LoadedData {
    /// One pool, split repeatedly.
    Pool(ModalDataset),
    /// Fixed train and test sets.
    Fixed { train: ModalDataset, test: ModalDataset },
}

pub fn load_dataset(config: &ExperimentConfig) -> Result<LoadedData> {
    let d = &config.dataset;
    let data_err = |path: &std::path::Path| {
        let path = path.to_path_buf();
        move |source| HarnessError::Data { path, source }
    };
    match d.kind {
        DatasetKind::Robot => {
            let path = d.path.as_ref().ok_or_else(|| HarnessError::Config("missing path".into()))?;
            let problem = d.problem.ok_or_else(|| HarnessError::Config("missing problem".into()))?;
            let ds = data::load_robot(path, problem, d.target_label.as_deref()).map_err(data_err(path))?;
            Ok(LoadedData::Pool(ds))
        }
        DatasetKind::Spectf => {
            let train = d.train_path.as_ref().ok_or_else(|| HarnessError::Config("missing train_path".into()))?;
            let test = d.test_path.as_ref().ok_or_else(|| HarnessError::Config("missing test_path".into()))?;
            let (train, test) = data::load_spectf(train, test, d.layout).map_err(data_err(train))?;
            Ok(LoadedData::Fixed { train, test })
        }
        DatasetKind::Synthetic => {
            let s = d.synthetic.as_ref().ok_or_else(|| HarnessError::Config("missing synthetic table".into()))?;
            let ds = data::synthetic(&SyntheticSpec {
                dims: s.dims.clone(),
                targets: s.targets,
                outliers: s.outliers,
                latent: s.latent,
                seed: s.seed,
                ..Default::default()
            })?;
            Ok(LoadedData::Pool(ds))
        }
    }
}

pub fn run_protocol(config: &ExperimentConfig) -> Result<ProtocolOutcome> {
    let data = load_dataset(config)?;
    run_protocol_on(&data, config)
}

/// Per-modality labels of every test item, fused and scored.
fn score(
    truth: &[Label],
    labels: &[Vec<Label>],
    strategy: DecisionStrategy,
) -> Result<(ConfusionCounts, MetricReport)> {
    let pred = labels
        .iter()
        .map(|l| fuse_labels(l, strategy))
        .collect::<mssvdd::Result<Vec<_>>>()?;
    let counts = ConfusionCounts::from_predictions(truth, &pred)?;
    Ok((counts, compute_metrics(&counts)?))
}

struct SplitContext<'a> {
    config: &'a ExperimentConfig,
    dataset: String,
    split: String,
    fold_seed: u64,
    stats: &'a MonotonicityStats,
    keep_models: bool,
}

impl SplitContext<'_> {
    fn row(
        &self,
        method: String,
        params: &HyperParams,
        counts: ConfusionCounts,
        metrics: MetricReport,
        cv_gmean: f64,
        subspace: bool,
    ) -> ResultRow {
        ResultRow {
            dataset: self.dataset.clone(),
            method,
            variant: subspace.then_some(params.variant),
            omega: subspace.then_some(params.omega),
            strategy: subspace.then_some(params.decision),
            d: Some(params.d),
            params: Some(*params),
            counts: Some(counts),
            metrics,
            split: self.split.clone(),
            cv_gmean: Some(cv_gmean),
            refit: true,
            standardized: self.config.protocol.standardize,
        }
    }

    fn run(&self, train: &ModalDataset, test: &ModalDataset) -> Result<(Vec<ResultRow>, Vec<SavedModel>)> {
        let cfg = self.config;
        let p = &cfg.protocol;
        let folds = cv_folds(&(0..train.len()).collect::<Vec<_>>(), &train.classes, p.cv_k, self.fold_seed)?;
        let mut rows = Vec::new();
        let mut models = Vec::new();

        let mut subspace_method = |method: String, tr: &ModalDataset, te: &ModalDataset, strategies: &[DecisionStrategy]| -> Result<()> {
            for &variant in &cfg.grids.variants {
                let grid = cells(&cfg.grids, variant);
                for &omega in &cfg.grids.omegas {
                    let space = SearchSpace {
                        variant,
                        omega,
                        max_iter: p.max_iter,
                        standardize: p.standardize,
                        center_kernel: p.center_kernel,
                    };
                    let selections = grid_search(tr, &folds, &grid, strategies, &space, self.stats)?;
                    let mut refits: BTreeMap<String, (TrainedModel, Vec<Vec<Label>>)> = BTreeMap::new();
                    for sel in selections {
                        let cell_key = format!("{:?}", HyperParams { decision: DecisionStrategy::And, ..sel.params });
                        if !refits.contains_key(&cell_key) {
                            let model = fit(tr, &sel.params, p.standardize)?;
                            let labels = model.modality_labels(te)?;
                            self.stats.record(&labels);
                            refits.insert(cell_key.clone(), (model, labels));
                        }
                        let (model, labels) = &refits[&cell_key];
                        let (counts, metrics) = score(&te.labels, labels, sel.params.decision)?;
                        rows.push(self.row(method.clone(), &sel.params, counts, metrics, sel.cv_gmean, true));
                        if self.keep_models {
                            let mut model = model.clone();
                            model.params.decision = sel.params.decision;
                            models.push(SavedModel {
                                name: format!("{}-{}-{}-{}", method.replace('/', "-"), variant, omega, sel.params.decision)
                                    .to_ascii_lowercase(),
                                model,
                            });
                        }
                    }
                }
            }
            Ok(())
        };

        subspace_method(METHOD_MSSVDD.into(), train, test, &cfg.grids.strategies)?;

        if p.baselines.contains(&Baseline::SSvdd) {
            for m in 0..train.modalities() {
                let name = format!("{METHOD_SSVDD}/{}", train.modality_names[m]);
                subspace_method(
                    name,
                    &train.single_modality(m),
                    &test.single_modality(m),
                    &[DecisionStrategy::FirstModality],
                )?;
            }
        }

        if p.baselines.contains(&Baseline::Svdd) {
            let mut cs = cfg.grids.c.clone();
            cs.sort_by(f64::total_cmp);
            cs.dedup();
            let strategies = [DecisionStrategy::FirstModality];
            let choice = search(train, &folds, &cs, &strategies, self.stats, METHOD_SVDD, |&c, fit_ds, val_ds| {
                fit_plain_svdd(fit_ds, c, p.standardize)?.modality_labels(&val_ds.concatenated())
            })?;
            let c = cs[choice[0].candidate];
            let model = fit_plain_svdd(train, c, p.standardize)?;
            let labels = model.modality_labels(&test.concatenated())?;
            let (counts, metrics) = score(&test.labels, &labels, DecisionStrategy::FirstModality)?;
            rows.push(self.row(METHOD_SVDD.into(), &model.params, counts, metrics, choice[0].cv_gmean, false));
            if self.keep_models {
                models.push(SavedModel {
                    name: "svdd".into(),
                    model,
                });
            }
        }
        Ok((rows, models))
    }
}

/// Means of the per-split rows, grouped by configuration in first-seen order.
pub fn summarize(rows: &[ResultRow]) -> Vec<ResultRow> {
    let mut order = Vec::new();
    let mut groups: BTreeMap<_, Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = r.group_key();
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let first = members[0];
            let reports: Vec<MetricReport> = members.iter().map(|r| r.metrics).collect();
            let d = first.d.filter(|&d| members.iter().all(|r| r.d == Some(d)));
            let cv: Vec<f64> = members.iter().filter_map(|r| r.cv_gmean).collect();
            ResultRow {
                d,
                params: None,
                counts: None,
                metrics: MetricReport::mean(&reports).expect("non-empty group"),
                split: "mean".into(),
                cv_gmean: (!cv.is_empty()).then(|| cv.iter().sum::<f64>() / cv.len() as f64),
                ..first.clone()
            }
        })
        .collect()
}

pub fn run_protocol_on(data: &LoadedData, config: &ExperimentConfig) -> Result<ProtocolOutcome> {
    let stats = MonotonicityStats::default();
    let p = &config.protocol;
    let dataset = config.dataset.display_name();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut models = Vec::new();

    let splits: Vec<(String, u64)> = match data {
        LoadedData::Pool(_) => p.split_seeds().into_iter().map(|s| (format!("seed{s}"), s)).collect(),
        LoadedData::Fixed { .. } => vec![("given".to_string(), p.seed)],
    };

    for (i, (split, seed)) in splits.iter().enumerate() {
        let parts = match data {
            LoadedData::Pool(ds) => stratified_split(&ds.classes, p.train_fraction, *seed)
                .map(|plan| (ds.subset(&plan.train_idx), ds.subset(&plan.test_idx)))
                .map_err(HarnessError::from),
            LoadedData::Fixed { train, test } => Ok((train.clone(), test.clone())),
        };
        let ctx = SplitContext {
            config,
            dataset: dataset.clone(),
            split: split.clone(),
            fold_seed: seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5EED,
            stats: &stats,
            keep_models: i == 0 && config.output.save_models,
        };
        match parts.and_then(|(train, test)| ctx.run(&train, &test)) {
            Ok((r, m)) => {
                rows.extend(r);
                models.extend(m);
            }
            Err(e) => {
                log::error!("split {split} failed: {e}");
                failures.push(SplitFailure {
                    split: split.clone(),
                    message: e.to_string(),
                });
            }
        }
    }

    let summary = summarize(&rows);
    Ok(ProtocolOutcome {
        rows,
        summary,
        failures,
        batches: stats.batches(),
        monotonicity_violations: stats.violations(),
        models,
    })
}
