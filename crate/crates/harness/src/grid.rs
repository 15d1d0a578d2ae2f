//! Cross-validated grid search on fused-label Gmean.

use std::sync::atomic::{AtomicUsize, Ordering};

use mssvdd::data::ModalDataset;
use mssvdd::metrics::{compute_metrics, fuse_labels, ConfusionCounts};
use mssvdd::model::fit;
use mssvdd::{DecisionStrategy, HyperParams, Label, Omega, Variant};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::GridConfig;
use crate::error::{HarnessError, Result};

/// One point of the hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub beta: f64,
    pub c: f64,
    pub sigma: f64,
    pub d: usize,
    pub eta: f64,
}

fn sorted_f64(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Grid cells in search order: β, then C, σ, d and η, each ascending.
/// The σ axis collapses to one value for the linear variant.
pub fn cells(grids: &GridConfig, variant: Variant) -> Vec<Cell> {
    let sigmas = if variant.uses_sigma() { sorted_f64(&grids.sigma) } else { vec![1.0] };
    let mut ds = grids.d.clone();
    ds.sort_unstable();
    ds.dedup();
    let mut out = Vec::new();
    for &beta in &sorted_f64(&grids.beta) {
        for &c in &sorted_f64(&grids.c) {
            for &sigma in &sigmas {
                for &d in &ds {
                    for &eta in &sorted_f64(&grids.eta) {
                        out.push(Cell { beta, c, sigma, d, eta });
                    }
                }
            }
        }
    }
    out
}

/// Counts of evaluation batches and of decision-strategy ordering violations.
#[derive(Debug, Default)]
pub struct MonotonicityStats {
    batches: AtomicUsize,
    violations: AtomicUsize,
}

impl MonotonicityStats {
    pub fn record(&self, labels: &[Vec<Label>]) {
        self.batches.fetch_add(1, Ordering::Relaxed);
        if !is_monotone(labels) {
            self.violations.fetch_add(1, Ordering::Relaxed);
        }
    }

    pub fn batches(&self) -> usize {
        self.batches.load(Ordering::Relaxed)
    }

    pub fn violations(&self) -> usize {
        self.violations.load(Ordering::Relaxed)
    }
}

/// Checks that the AND-fused positives lie inside the single-modality
/// positives, which lie inside the OR-fused positives, for every item.
pub fn is_monotone(labels: &[Vec<Label>]) -> bool {
    use DecisionStrategy::*;
    labels.iter().all(|item| {
        let fused = |s: DecisionStrategy| fuse_labels(item, s).map(|l| l.is_target()).ok();
        let (and, or) = (fused(And), fused(Or));
        let singles: Vec<bool> = [FirstModality, SecondModality].into_iter().filter_map(fused).collect();
        match (and, or) {
            (Some(a), Some(o)) => singles.iter().all(|&s| (!a || s) && (!s || o)) && (!a || o),
            _ => false,
        }
    })
}

/// Gmean of fused predictions against the truth.
pub fn fused_gmean(truth: &[Label], labels: &[Vec<Label>], strategy: DecisionStrategy) -> mssvdd::Result<f64> {
    let pred = labels
        .iter()
        .map(|l| fuse_labels(l, strategy))
        .collect::<mssvdd::Result<Vec<_>>>()?;
    Ok(compute_metrics(&ConfusionCounts::from_predictions(truth, &pred)?)?.gmean)
}

/// Best candidate for one decision strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub strategy: DecisionStrategy,
    pub candidate: usize,
    pub cv_gmean: f64,
}

/// Scores every candidate by mean validation Gmean over `folds` and returns
/// the best candidate for each strategy; ties keep the earliest candidate.
///
/// `fit_eval` trains on the fit part of a fold and returns per-modality
/// labels for each validation item. Candidates whose fit or evaluation fails
/// on any fold are skipped.
pub fn search<T, F>(
    train: &ModalDataset,
    folds: &[(Vec<usize>, Vec<usize>)],
    candidates: &[T],
    strategies: &[DecisionStrategy],
    stats: &MonotonicityStats,
    what: &str,
    fit_eval: F,
) -> Result<Vec<Choice>>
where
    T: Sync,
    F: Fn(&T, &ModalDataset, &ModalDataset) -> mssvdd::Result<Vec<Vec<Label>>> + Sync,
{
    let fold_data: Vec<(ModalDataset, ModalDataset)> =
        folds.iter().map(|(f, v)| (train.subset(f), train.subset(v))).collect();
    let scores: Vec<Option<Vec<f64>>> = candidates
        .par_iter()
        .enumerate()
        .map(|(ci, cand)| {
            let mut sums = vec![0.0; strategies.len()];
            for (k, (fit_ds, val_ds)) in fold_data.iter().enumerate() {
                let outcome = fit_eval(cand, fit_ds, val_ds).and_then(|labels| {
                    stats.record(&labels);
                    strategies
                        .iter()
                        .map(|&s| fused_gmean(&val_ds.labels, &labels, s))
                        .collect::<mssvdd::Result<Vec<_>>>()
                });
                match outcome {
                    Ok(g) => sums.iter_mut().zip(g).for_each(|(a, b)| *a += b),
                    Err(e) => {
                        log::debug!("{what}: candidate {ci} skipped on fold {k}: {e}");
                        return None;
                    }
                }
            }
            Some(sums.into_iter().map(|s| s / fold_data.len() as f64).collect())
        })
        .collect();

    let skipped = scores.iter().filter(|s| s.is_none()).count();
    if skipped > 0 {
        log::info!("{what}: {skipped} of {} grid cells infeasible or failed", candidates.len());
    }
    strategies
        .iter()
        .enumerate()
        .map(|(si, &strategy)| {
            let mut best: Option<Choice> = None;
            for (ci, s) in scores.iter().enumerate() {
                if let Some(s) = s {
                    if best.as_ref().map_or(true, |b| s[si] > b.cv_gmean) {
                        best = Some(Choice {
                            strategy,
                            candidate: ci,
                            cv_gmean: s[si],
                        });
                    }
                }
            }
            best.ok_or_else(|| HarnessError::NoFeasibleCell(format!("{what}, {strategy}")))
        })
        .collect()
}

/// Fixed settings of one subspace search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchSpace {
    pub variant: Variant,
    pub omega: Omega,
    pub max_iter: usize,
    pub standardize: bool,
    pub center_kernel: bool,
}

impl SearchSpace {
    pub fn params(&self, cell: &Cell, strategy: DecisionStrategy) -> HyperParams {
        HyperParams {
            variant: self.variant,
            omega: self.omega,
            c: cell.c,
            beta: cell.beta,
            sigma: cell.sigma,
            d: cell.d,
            eta: cell.eta,
            max_iter: self.max_iter,
            decision: strategy,
            center_kernel: self.center_kernel,
        }
    }
}

/// Selected hyperparameters for one decision strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub params: HyperParams,
    pub cv_gmean: f64,
}

/// Drops cells whose `d` is not below every modality dimension.
pub fn feasible_cells(cells: &[Cell], dims: &[usize]) -> Vec<Cell> {
    let min_dim = dims.iter().copied().min().unwrap_or(0);
    let (keep, drop): (Vec<Cell>, Vec<Cell>) = cells.iter().partition(|c| c.d < min_dim);
    if !drop.is_empty() {
        log::warn!("dropping {} grid cells with d >= {min_dim}", drop.len());
    }
    keep
}

/// Grid search of the subspace model for every applicable strategy.
pub fn grid_search(
    train: &ModalDataset,
    folds: &[(Vec<usize>, Vec<usize>)],
    cells: &[Cell],
    strategies: &[DecisionStrategy],
    space: &SearchSpace,
    stats: &MonotonicityStats,
) -> Result<Vec<Selection>> {
    let strategies: Vec<DecisionStrategy> = strategies
        .iter()
        .copied()
        .filter(|s| s.min_modalities() <= train.modalities())
        .collect();
    let cells = feasible_cells(cells, &train.dims());
    let what = format!("{} {}", space.variant, space.omega);
    let choices = search(train, folds, &cells, &strategies, stats, &what, |cell, fit_ds, val_ds| {
        let model = fit(fit_ds, &space.params(cell, DecisionStrategy::FirstModality), space.standardize)?;
        model.modality_labels(val_ds)
    })?;
    Ok(choices
        .into_iter()
        .map(|ch| Selection {
            params: space.params(&cells[ch.candidate], ch.strategy),
            cv_gmean: ch.cv_gmean,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Outlier as N, Target as P};

    #[test]
    fn cell_order_is_beta_major() {
        let g = GridConfig {
            beta: vec![10.0, 1.0],
            c: vec![0.5, 0.1],
            d: vec![2, 1],
            sigma: vec![3.0],
            eta: vec![0.1],
            ..Default::default()
        };
        let c = cells(&g, Variant::Linear);
        assert_eq!(c.len(), 8);
        assert_eq!((c[0].beta, c[0].c, c[0].d), (1.0, 0.1, 1));
        assert_eq!((c[1].beta, c[1].c, c[1].d), (1.0, 0.1, 2));
        assert_eq!((c[2].beta, c[2].c, c[2].d), (1.0, 0.5, 1));
        assert_eq!(c[4].beta, 10.0);
        assert_eq!(cells(&GridConfig::default(), Variant::Kernel).len(), 9 * 8 * 7 * 9);
    }

    #[test]
    fn monotonicity_check() {
        assert!(is_monotone(&[vec![P, N], vec![N, N], vec![P, P]]));
        assert!(is_monotone(&[vec![P], vec![N]]));
    }
}
