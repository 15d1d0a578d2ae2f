//! Linear variant: per-modality projections `Qₘ` on raw features, PCA
//! initialization and QR re-orthonormalization after every step.

use nalgebra::DMatrix;

use crate::data::ModalDataset;
use crate::error::{Error, Result};
use crate::model::{HyperParams, Preprocessing, ProjectionSet, TrainedModel};
use crate::numerics::{orthonormalize_rows, pca_directions};
pub use crate::subspace::{main_gradient, omega_gradient, omega_value};
use crate::subspace::{alternate, Observer};

/// `Q · X`, column by column.
pub fn project_modality(q: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if q.ncols() != x.nrows() {
        return Err(Error::DimensionMismatch {
            expected: q.ncols(),
            found: x.nrows(),
        });
    }
    Ok(q * x)
}

/// Top-`d` principal directions of every modality.
pub fn pca_init(x: &[DMatrix<f64>], d: usize) -> Result<ProjectionSet> {
    ProjectionSet::new(x.iter().map(|xm| pca_directions(xm, d)).collect::<Result<_>>()?)
}

pub fn train_linear(data: &ModalDataset, params: &HyperParams) -> Result<TrainedModel> {
    train_linear_observed(data, params, None)
}

/// Trains on the target items of `data`, starting from PCA directions.
pub fn train_linear_observed(
    data: &ModalDataset,
    params: &HyperParams,
    observer: Option<Observer<'_>>,
) -> Result<TrainedModel> {
    let targets = data.targets();
    let init = pca_init(&targets.x, params.d)?;
    train_linear_from(&targets.x, params, init, observer)
}

/// Runs the linear training loop on `x` (already restricted to targets) from `init`.
pub fn train_linear_from(
    x: &[DMatrix<f64>],
    params: &HyperParams,
    init: ProjectionSet,
    observer: Option<Observer<'_>>,
) -> Result<TrainedModel> {
    params.validate()?;
    if init.mats.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: init.mats.len(),
        });
    }
    let trained = alternate(x, init.mats, params, |_, q| orthonormalize_rows(q), observer)?;
    Ok(TrainedModel {
        params: *params,
        projections: ProjectionSet::new(trained.projections)?,
        dual: trained.solution,
        train_repr: trained.points,
        preproc: Preprocessing::default(),
    })
}
