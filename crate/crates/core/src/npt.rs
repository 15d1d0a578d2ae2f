//! Explicit kernel-space embedding computed once from the centered Gram
//! matrix, after which the linear variant is trained on the embedding.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::ModalDataset;
use crate::error::{Error, Result};
use crate::kernel::rbf_kernel;
use crate::linear::{pca_init, train_linear_from};
use crate::model::{HyperParams, TrainedModel};
use crate::numerics::{retained_rank, sym_eig};
use crate::subspace::Observer;

/// `(I − E) K (I − E)` with `E = 11ᵀ/N`.
pub fn center_kernel(k: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k.nrows();
    if n == 0 {
        return k.clone();
    }
    let row_means = k.column_mean();
    let col_means = k.row_mean();
    let grand = k.mean();
    DMatrix::from_fn(n, k.ncols(), |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// Centers a test kernel column consistently with [`center_kernel`] of `gram`:
/// `(I − E)(k − K1/N)`.
pub fn center_test_vector(gram: &DMatrix<f64>, k: &DVector<f64>) -> DVector<f64> {
    let v = k - gram.column_mean();
    let mean = v.mean();
    v.map(|x| x - mean)
}

/// Retained eigenpairs of a centered Gram matrix and the embedded training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NptEmbedding {
    /// r × N.
    pub phi: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    /// N × r.
    pub eigenvectors: DMatrix<f64>,
}

impl NptEmbedding {
    /// `A^{-1/2} Uᵀ k` over the retained directions.
    pub fn map(&self, k_centered: &DVector<f64>) -> DVector<f64> {
        let mut out = self.eigenvectors.transpose() * k_centered;
        for (o, a) in out.iter_mut().zip(self.eigenvalues.iter()) {
            *o /= a.sqrt();
        }
        out
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Embeds an already centered Gram matrix: `Φ = A^{-1/2} Uᵀ K̂` on eigenvalues
/// above the relative cutoff.
pub fn npt_embed(k_centered: &DMatrix<f64>) -> Result<NptEmbedding> {
    let eig = sym_eig(k_centered)?;
    let r = retained_rank(&eig.values);
    if r == 0 {
        return Err(Error::DegenerateKernel);
    }
    let eigenvalues = eig.values.rows(0, r).into_owned();
    let eigenvectors = eig.vectors.columns(0, r).into_owned();
    let mut phi = eigenvectors.transpose() * k_centered;
    for (mut row, a) in phi.row_iter_mut().zip(eigenvalues.iter()) {
        row /= a.sqrt();
    }
    Ok(NptEmbedding {
        phi,
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NptModality {
    /// Uncentered training Gram matrix.
    pub gram: DMatrix<f64>,
    pub centered: DMatrix<f64>,
    pub embedding: NptEmbedding,
    pub train_x: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NptState {
    pub modalities: Vec<NptModality>,
    pub sigma: f64,
}

/// Replaces every modality of `data` by its embedding.
pub fn npt_preprocess(data: &ModalDataset, sigma: f64) -> Result<(ModalDataset, NptState)> {
    let mut out = data.clone();
    let mut modalities = Vec::with_capacity(data.modalities());
    for (m, x) in data.x.iter().enumerate() {
        let gram = rbf_kernel(x, x, sigma)?;
        let centered = center_kernel(&gram);
        let embedding = npt_embed(&centered)?;
        out.x[m] = embedding.phi.clone();
        modalities.push(NptModality {
            gram,
            centered,
            embedding,
            train_x: x.clone(),
        });
    }
    Ok((out, NptState { modalities, sigma }))
}

/// Embedding of a new raw feature vector of modality `m`.
pub fn npt_map_test(state: &NptState, m: usize, x_star: &DVector<f64>) -> Result<DVector<f64>> {
    let md = state.modalities.get(m).ok_or(Error::DimensionMismatch {
        expected: state.modalities.len(),
        found: m + 1,
    })?;
    let col = DMatrix::from_column_slice(x_star.len(), 1, x_star.as_slice());
    let k = rbf_kernel(&md.train_x, &col, state.sigma)?.column(0).into_owned();
    Ok(md.embedding.map(&center_test_vector(&md.gram, &k)))
}

pub fn train_npt(data: &ModalDataset, params: &HyperParams) -> Result<TrainedModel> {
    train_npt_observed(data, params, None)
}

/// Embeds the target items of `data`, then trains the linear variant on the embedding.
pub fn train_npt_observed(
    data: &ModalDataset,
    params: &HyperParams,
    observer: Option<Observer<'_>>,
) -> Result<TrainedModel> {
    params.validate()?;
    let (embedded, state) = npt_preprocess(&data.targets(), params.sigma)?;
    let init = pca_init(&embedded.x, params.d)?;
    let mut model = train_linear_from(&embedded.x, params, init, observer)?;
    model.preproc.npt = Some(state);
    Ok(model)
}
