//! Kernel variant: projections are weights `Wₘ` (d × N) over RBF Gram
//! columns, kept normalized so that `Wₘ Kₘ Wₘᵀ = I`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::ModalDataset;
use crate::error::{Error, Result};
use crate::model::{HyperParams, Preprocessing, ProjectionSet, TrainedModel};
use crate::npt::{center_kernel, center_test_vector};
use crate::numerics::{diag_sqrt_pinv, ensure_finite, retained_rank, sym_eig};
use crate::subspace::{alternate, Observer};
pub use crate::subspace::{omega_gradient, omega_value};

/// Training data and Gram matrices retained for scoring new items.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelState {
    /// Uncentered training Gram matrix of each modality.
    pub grams: Vec<DMatrix<f64>>,
    pub sigma: f64,
    pub train_x: Vec<DMatrix<f64>>,
    /// Whether the model was trained on centered Gram matrices.
    pub centered: bool,
}

impl KernelState {
    pub fn new(train_x: &[DMatrix<f64>], sigma: f64, centered: bool) -> Result<Self> {
        let grams = train_x
            .iter()
            .map(|x| rbf_kernel(x, x, sigma))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grams,
            sigma,
            train_x: train_x.to_vec(),
            centered,
        })
    }

    /// The matrices the projections act on during training.
    pub fn training_inputs(&self) -> Vec<DMatrix<f64>> {
        if self.centered {
            self.grams.iter().map(center_kernel).collect()
        } else {
            self.grams.clone()
        }
    }

    /// Kernel column of `x` against the training items, centered if the model was.
    pub fn input_vector(&self, m: usize, x: &DVector<f64>) -> Result<DVector<f64>> {
        let k = test_kernel_vector(self, m, x)?;
        Ok(if self.centered {
            center_test_vector(&self.grams[m], &k)
        } else {
            k
        })
    }
}

/// Per-modality kernel projections, each d × N.
pub type WSet = ProjectionSet;

/// `exp(−‖xᵢ − x2ⱼ‖² / 2σ²)` for every column pair.
pub fn rbf_kernel(x: &DMatrix<f64>, x2: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParams(format!("sigma must be positive, got {sigma}")));
    }
    if x.nrows() != x2.nrows() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            found: x2.nrows(),
        });
    }
    let scale = 2.0 * sigma * sigma;
    Ok(DMatrix::from_fn(x.ncols(), x2.ncols(), |i, j| {
        let d2 = x.column(i).iter().zip(x2.column(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        (-d2 / scale).exp()
    }))
}

/// `W · K`, column by column.
pub fn kernel_project(w: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    crate::linear::project_modality(w, k)
}

/// Same structure as the linear main gradient with Gram columns as inputs.
pub fn kernel_main_gradient(
    m: usize,
    ws: &[DMatrix<f64>],
    ks: &[DMatrix<f64>],
    alphas: &[DVector<f64>],
) -> Result<DMatrix<f64>> {
    crate::subspace::main_gradient(m, ws, ks, alphas)
}

/// `Ŵ = Λ^{-1/2} Vᵀ W` where `W K Wᵀ = V Λ Vᵀ`; clamped directions become zero rows.
pub fn normalize_w(w: &DMatrix<f64>, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_finite(w, "projection")?;
    let s = w * k * w.transpose();
    let eig = sym_eig(&s)?;
    let inv_sqrt = diag_sqrt_pinv(&eig.values);
    let kept = inv_sqrt.iter().filter(|&&v| v > 0.0).count();
    if kept == 0 {
        return Err(Error::DegenerateProjection);
    }
    if kept < w.nrows() {
        log::debug!("normalize_w: {} of {} directions clamped", w.nrows() - kept, w.nrows());
    }
    let mut out = eig.vectors.transpose() * w;
    for (mut row, &g) in out.row_iter_mut().zip(inv_sqrt.iter()) {
        row *= g;
    }
    Ok(out)
}

/// Kernel PCA directions on the double-centered `k`: rows `uₖᵀ / √aₖ`.
pub fn kernel_pca_init(k: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>> {
    let eig = sym_eig(&center_kernel(k))?;
    let rank = retained_rank(&eig.values);
    if d == 0 || d > rank {
        return Err(Error::DimensionTooLarge { requested: d, rank });
    }
    let mut w = eig.vectors.columns(0, d).transpose();
    for (mut row, &a) in w.row_iter_mut().zip(eig.values.iter()) {
        row /= a.sqrt();
    }
    Ok(w)
}

/// Kernel vector of `x_star` against the training items of modality `m`.
pub fn test_kernel_vector(state: &KernelState, m: usize, x_star: &DVector<f64>) -> Result<DVector<f64>> {
    let x = state.train_x.get(m).ok_or(Error::DimensionMismatch {
        expected: state.train_x.len(),
        found: m + 1,
    })?;
    let col = DMatrix::from_column_slice(x_star.len(), 1, x_star.as_slice());
    let k = rbf_kernel(x, &col, state.sigma)?;
    Ok(k.column(0).into_owned())
}

pub fn train_kernel(data: &ModalDataset, params: &HyperParams) -> Result<TrainedModel> {
    train_kernel_observed(data, params, None)
}

/// Trains on the target items of `data` from normalized kernel PCA directions.
pub fn train_kernel_observed(
    data: &ModalDataset,
    params: &HyperParams,
    observer: Option<Observer<'_>>,
) -> Result<TrainedModel> {
    params.validate()?;
    let targets = data.targets();
    let state = KernelState::new(&targets.x, params.sigma, params.center_kernel)?;
    let z = state.training_inputs();
    let init = state
        .grams
        .iter()
        .zip(&z)
        .map(|(k, zm)| normalize_w(&kernel_pca_init(k, params.d)?, zm))
        .collect::<Result<Vec<_>>>()?;
    let trained = alternate(&z, init, params, |m, w| normalize_w(w, &z[m]), observer)?;
    Ok(TrainedModel {
        params: *params,
        projections: ProjectionSet::new(trained.projections)?,
        dual: trained.solution,
        train_repr: trained.points,
        preproc: Preprocessing {
            kernel: Some(state),
            ..Default::default()
        },
    })
}
