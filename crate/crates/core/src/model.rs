//! Hyperparameters, trained models and the variant-dispatching `fit`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{ModalDataset, Standardizer};
use crate::error::{Error, Result};
use crate::kernel::{self, KernelState};
use crate::linear;
use crate::metrics::{fuse_labels, DecisionStrategy};
use crate::npt::{self, NptState};
use crate::subspace::{Observer, Omega};
use crate::svdd::{classify_point, distance_to_center, DualSolution, PooledPoints};
use crate::Label;

/// Which projection family is trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Linear,
    Kernel,
    Npt,
}

impl Variant {
    pub fn uses_sigma(self) -> bool {
        self != Variant::Linear
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Linear => "linear",
            Variant::Kernel => "kernel",
            Variant::Npt => "npt",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Variant::Linear),
            "kernel" => Ok(Variant::Kernel),
            "npt" => Ok(Variant::Npt),
            other => Err(Error::InvalidParams(format!("unknown variant {other:?}"))),
        }
    }
}

/// Full training configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub variant: Variant,
    pub omega: Omega,
    /// Box bound on α.
    pub c: f64,
    /// Weight of the regularizer.
    pub beta: f64,
    /// RBF width; ignored by the linear variant.
    pub sigma: f64,
    /// Shared subspace dimension.
    pub d: usize,
    /// Gradient step size.
    pub eta: f64,
    pub max_iter: usize,
    pub decision: DecisionStrategy,
    /// Kernel variant only: train on the centered Gram matrix instead of the raw one.
    #[serde(default)]
    pub center_kernel: bool,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            variant: Variant::Linear,
            omega: Omega::None,
            c: 0.5,
            beta: 1.0,
            sigma: 1.0,
            d: 2,
            eta: 0.1,
            max_iter: 50,
            decision: DecisionStrategy::And,
            center_kernel: false,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(msg));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return fail(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return fail(format!("C must lie in (0, 1], got {}", self.c));
        }
        if self.d == 0 {
            return fail("d must be at least 1".into());
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return fail(format!("beta must be non-negative, got {}", self.beta));
        }
        if self.variant.uses_sigma() && !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return fail(format!("sigma must be positive, got {}", self.sigma));
        }
        Ok(())
    }
}

/// Per-modality projection matrices (`Qₘ` or `Wₘ`), each d × inputₘ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSet {
    pub mats: Vec<DMatrix<f64>>,
    pub d: usize,
}

impl ProjectionSet {
    pub fn new(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let d = mats
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| Error::InvalidInput("empty projection set".into()))?;
        if mats.iter().any(|m| m.nrows() != d) {
            return Err(Error::InvalidInput("projections disagree on d".into()));
        }
        Ok(Self { mats, d })
    }

    /// Square identity projections, one per input dimensionality.
    pub fn identity(dims: &[usize]) -> Result<Self> {
        Self::new(dims.iter().map(|&n| DMatrix::identity(n, n)).collect())
    }
}

/// State needed to map raw test features into the subspace inputs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Preprocessing {
    pub standardizer: Option<Standardizer>,
    pub kernel: Option<KernelState>,
    pub npt: Option<NptState>,
}

/// Everything needed to score new items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub params: HyperParams,
    pub projections: ProjectionSet,
    pub dual: DualSolution,
    /// Projected training targets the description was solved on.
    pub train_repr: PooledPoints,
    pub preproc: Preprocessing,
}

impl TrainedModel {
    pub fn modalities(&self) -> usize {
        self.projections.mats.len()
    }

    /// Raw feature dimension expected for each modality.
    pub fn input_dims(&self) -> Vec<usize> {
        if let Some(k) = &self.preproc.kernel {
            return k.train_x.iter().map(|x| x.nrows()).collect();
        }
        if let Some(n) = &self.preproc.npt {
            return n.modalities.iter().map(|m| m.train_x.nrows()).collect();
        }
        self.projections.mats.iter().map(|q| q.ncols()).collect()
    }

    /// Subspace representation of a raw feature vector of modality `m`.
    pub fn represent(&self, m: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        if m >= self.modalities() {
            return Err(Error::DimensionMismatch {
                expected: self.modalities(),
                found: m + 1,
            });
        }
        let dims = self.input_dims();
        if x.len() != dims[m] {
            return Err(Error::DimensionMismatch {
                expected: dims[m],
                found: x.len(),
            });
        }
        let x = match &self.preproc.standardizer {
            Some(st) => st.transform_vector(m, x)?,
            None => x.clone(),
        };
        let input = match self.params.variant {
            Variant::Linear => x,
            Variant::Kernel => {
                let state = self
                    .preproc
                    .kernel
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("kernel model without kernel state".into()))?;
                state.input_vector(m, &x)?
            }
            Variant::Npt => {
                let state = self
                    .preproc
                    .npt
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("NPT model without NPT state".into()))?;
                npt::npt_map_test(state, m, &x)?
            }
        };
        Ok(&self.projections.mats[m] * input)
    }

    /// Squared distance to the center and label, per modality of one item.
    pub fn decision_values(&self, item: &[DVector<f64>]) -> Result<Vec<(f64, Label)>> {
        if item.len() != self.modalities() {
            return Err(Error::DimensionMismatch {
                expected: self.modalities(),
                found: item.len(),
            });
        }
        item.iter()
            .enumerate()
            .map(|(m, x)| {
                let y = self.represent(m, x)?;
                let d2 = distance_to_center(&y, &self.train_repr, &self.dual)?;
                Ok((d2, classify_point(d2, self.dual.r_squared)))
            })
            .collect()
    }

    /// Per-modality labels for every item of `data`, indexed `[item][modality]`.
    pub fn modality_labels(&self, data: &ModalDataset) -> Result<Vec<Vec<Label>>> {
        (0..data.len())
            .map(|i| {
                let item = data.item(i);
                Ok(self.decision_values(&item)?.into_iter().map(|(_, l)| l).collect())
            })
            .collect()
    }

    /// Fused label per item with the model's decision strategy.
    pub fn predict(&self, data: &ModalDataset) -> Result<Vec<Label>> {
        self.modality_labels(data)?
            .iter()
            .map(|labels| fuse_labels(labels, self.params.decision))
            .collect()
    }
}

/// Standardizes (optionally) on the target items and trains the selected variant.
pub fn fit(data: &ModalDataset, params: &HyperParams, standardize: bool) -> Result<TrainedModel> {
    fit_observed(data, params, standardize, None)
}

/// As [`fit`], reporting every training iteration to `observer`.
pub fn fit_observed(
    data: &ModalDataset,
    params: &HyperParams,
    standardize: bool,
    observer: Option<Observer<'_>>,
) -> Result<TrainedModel> {
    params.validate()?;
    let targets = data.targets();
    let (input, standardizer) = if standardize {
        let st = Standardizer::fit(&targets);
        (st.transform(&targets)?, Some(st))
    } else {
        (targets, None)
    };
    let mut model = match params.variant {
        Variant::Linear => linear::train_linear_observed(&input, params, observer)?,
        Variant::Kernel => kernel::train_kernel_observed(&input, params, observer)?,
        Variant::Npt => npt::train_npt_observed(&input, params, observer)?,
    };
    model.preproc.standardizer = standardizer;
    Ok(model)
}

/// Plain description of the concatenated features: one modality, square
/// identity projection, no projection updates.
pub fn fit_plain_svdd(data: &ModalDataset, c: f64, standardize: bool) -> Result<TrainedModel> {
    let concat = data.concatenated();
    let dim = concat.dims()[0];
    let params = HyperParams {
        c,
        d: dim,
        max_iter: 0,
        beta: 0.0,
        decision: DecisionStrategy::FirstModality,
        ..Default::default()
    };
    params.validate()?;
    let targets = concat.targets();
    let (input, standardizer) = if standardize {
        let st = Standardizer::fit(&targets);
        (st.transform(&targets)?, Some(st))
    } else {
        (targets, None)
    };
    let mut model = linear::train_linear_from(&input.x, &params, ProjectionSet::identity(&[dim])?, None)?;
    model.preproc.standardizer = standardizer;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(HyperParams::default().validate().is_ok());
        let bad = [
            HyperParams { eta: 0.0, ..Default::default() },
            HyperParams { c: 1.5, ..Default::default() },
            HyperParams { c: 0.0, ..Default::default() },
            HyperParams { d: 0, ..Default::default() },
            HyperParams { beta: -1.0, ..Default::default() },
            HyperParams { variant: Variant::Kernel, sigma: 0.0, ..Default::default() },
        ];
        for p in bad {
            assert!(p.validate().is_err(), "{p:?}");
        }
    }

    #[test]
    fn variant_parsing() {
        assert_eq!("NPT".parse::<Variant>().unwrap(), Variant::Npt);
        assert!("rbf".parse::<Variant>().is_err());
    }
}
