//! Dense linear-algebra helpers the optimizers are built on.
//!
//! Matrices are `nalgebra::DMatrix<f64>`. Data matrices follow the
//! convention used throughout the crate: one column per item, one row per
//! feature.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative cutoff below which eigenvalues are treated as zero.
pub const EIG_CUTOFF: f64 = 1e-9;
/// Relative singular-value cutoff used to decide the rank of a projection.
pub const QR_RANK_TOL: f64 = 1e-10;
/// Tolerated asymmetry, relative to `1 + max|S|`, before `sym_eig` refuses a matrix.
pub const SYM_TOL: f64 = 1e-8;

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: DVector<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: DMatrix<f64>,
}

pub(crate) fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} contains non-finite entries")))
    }
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Numerical rank from singular values, relative to the largest one.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0_f64, f64::max);
    if largest <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s >= rel_tol * largest).count()
}

/// Returns a matrix with orthonormal rows spanning the row space of `q`.
///
/// Computed from the QR decomposition of `qᵀ`. Signs are fixed so that the
/// triangular factor has a non-negative diagonal, which makes the map the
/// identity on inputs that already have orthonormal rows.
pub fn orthonormalize_rows(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (d, dim) = q.shape();
    ensure_finite(q, "projection")?;
    if d == 0 || d > dim {
        return Err(Error::RankDeficient {
            rank: d.min(dim),
            expected: d,
        });
    }
    let rank = numerical_rank(q, QR_RANK_TOL);
    if rank < d {
        return Err(Error::RankDeficient { rank, expected: d });
    }
    let qr = q.transpose().qr();
    let r = qr.r();
    let mut basis = qr.q();
    for k in 0..d {
        if r[(k, k)] < 0.0 {
            basis.column_mut(k).neg_mut();
        }
    }
    Ok(basis.transpose())
}

/// Eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized by averaging with its transpose after the
/// asymmetry check, so roundoff from products like `W K Wᵀ` is harmless.
pub fn sym_eig(s: &DMatrix<f64>) -> Result<EigResult> {
    let (n, m) = s.shape();
    if n != m {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m,
        });
    }
    ensure_finite(s, "symmetric matrix")?;
    let asymmetry = max_abs(&(s - s.transpose()));
    if asymmetry > SYM_TOL * (1.0 + max_abs(s)) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let sym = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(EigResult { values, vectors })
}

/// Number of eigenvalues above `EIG_CUTOFF` times the largest (clamped at 0).
pub(crate) fn retained_rank(values: &DVector<f64>) -> usize {
    let top = values.iter().cloned().fold(0.0_f64, f64::max);
    if top <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > EIG_CUTOFF * top).count()
}

/// Subtracts the mean column from every column.
pub fn center_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.ncols();
    if n == 0 {
        return x.clone();
    }
    let mean = x.column_mean();
    let mut out = x.clone();
    for mut col in out.column_iter_mut() {
        col -= &mean;
    }
    out
}

/// Top-`d` principal directions of `x` (features × items), as rows.
///
/// The data is centered for the covariance but the mean is not returned:
/// projections are later applied to the raw features.
pub fn pca_directions(x: &DMatrix<f64>, d: usize) -> Result<DMatrix<f64>> {
    let (dim, n) = x.shape();
    ensure_finite(x, "data")?;
    if d == 0 || d > dim.min(n) {
        return Err(Error::DimensionTooLarge {
            requested: d,
            rank: dim.min(n),
        });
    }
    let centered = center_columns(x);
    let scatter = &centered * centered.transpose() / n as f64;
    let eig = sym_eig(&scatter)?;
    let rank = retained_rank(&eig.values);
    if d > rank {
        return Err(Error::DimensionTooLarge { requested: d, rank });
    }
    Ok(eig.vectors.columns(0, d).transpose())
}

/// Elementwise `1/√v` with pseudo-inverse clamping.
///
/// Entries at or below `EIG_CUTOFF · max(values, 0)` map to zero; small
/// negative values from roundoff are absorbed by the same rule.
pub fn diag_sqrt_pinv(values: &DVector<f64>) -> DVector<f64> {
    let top = values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = EIG_CUTOFF * top;
    values.map(|v| if v > cutoff && v > 0.0 { 1.0 / v.sqrt() } else { 0.0 })
}
