//! Support vector data description over pooled points.
//!
//! The dual is
//!
//! ```text
//! max  Σ αᵢ yᵢᵀyᵢ − Σᵢ Σⱼ αᵢ αⱼ yᵢᵀyⱼ
//! s.t. Σ αᵢ = 1,  0 ≤ αᵢ ≤ C
//! ```
//!
//! and is solved by projected-gradient ascent with an exact projection onto
//! the capped simplex, followed by a pairwise (SMO-style) polish that runs
//! until the KKT residual drops below [`KKT_TOL`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Label;

/// Tolerance used to classify α as zero or at the box bound.
pub const ALPHA_TOL: f64 = 1e-8;
/// Stopping threshold for the maximal KKT violation, scaled by `max(1, max ‖yᵢ‖²)`.
pub const KKT_TOL: f64 = 1e-7;
/// Iteration cap of the pairwise polish.
pub const SMO_MAX_ITERS: usize = 10_000;
const PG_MAX_ITERS: usize = 20;
/// KKT violation, relative to the scale, at which projected gradient hands over to the polish.
const PG_HANDOFF_TOL: f64 = 1e-3;

/// Projected representations of all modalities, modality-major: all items of
/// modality 1, then all items of modality 2, and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PooledPoints {
    y: DMatrix<f64>,
    modalities: usize,
    items: usize,
}

impl PooledPoints {
    pub fn new(y: DMatrix<f64>, modalities: usize, items: usize) -> Result<Self> {
        if y.ncols() != modalities * items {
            return Err(Error::DimensionMismatch {
                expected: modalities * items,
                found: y.ncols(),
            });
        }
        Ok(Self { y, modalities, items })
    }

    /// Stacks per-modality blocks (each d × N) side by side.
    pub fn from_blocks(blocks: &[DMatrix<f64>]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::InvalidInput("no modalities".into()))?;
        let (d, n) = first.shape();
        let mut y = DMatrix::zeros(d, n * blocks.len());
        for (m, b) in blocks.iter().enumerate() {
            if b.shape() != (d, n) {
                return Err(Error::DimensionMismatch {
                    expected: d * n,
                    found: b.nrows() * b.ncols(),
                });
            }
            y.columns_mut(m * n, n).copy_from(b);
        }
        Ok(Self {
            y,
            modalities: blocks.len(),
            items: n,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn modalities(&self) -> usize {
        self.modalities
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn dim(&self) -> usize {
        self.y.nrows()
    }

    pub fn len(&self) -> usize {
        self.y.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.y.ncols() == 0
    }

    /// Block of modality `m` (d × N).
    pub fn block(&self, m: usize) -> DMatrix<f64> {
        self.y.columns(m * self.items, self.items).into_owned()
    }

    pub fn gram(&self) -> DMatrix<f64> {
        self.y.transpose() * &self.y
    }
}

/// Solution of the pooled dual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub alpha: DVector<f64>,
    pub c: f64,
    /// Indices with `ALPHA_TOL < α < C − ALPHA_TOL`.
    pub support_idx: Vec<usize>,
    /// Indices with `α ≥ C − ALPHA_TOL`.
    pub outlier_idx: Vec<usize>,
    pub r_squared: f64,
    pub objective: f64,
    /// `aᵀa` for the center `a = Σ αᵢ yᵢ`, cached for test-time distances.
    pub center_norm_sq: f64,
    pub kkt_residual: f64,
    /// Set when every point coincides; α is uniform and R² is zero.
    pub degenerate: bool,
}

impl DualSolution {
    /// α entries belonging to modality `m`.
    pub fn alpha_slice(&self, m: usize, items: usize) -> DVector<f64> {
        self.alpha.rows(m * items, items).into_owned()
    }

    /// Explicit center `Σ αᵢ yᵢ`.
    pub fn center(&self, points: &PooledPoints) -> DVector<f64> {
        points.matrix() * &self.alpha
    }
}

/// α with the outlier entries (α at the box bound) zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaVector(pub DVector<f64>);

pub fn lambda_from_alpha(alpha_slice: &DVector<f64>, c: f64) -> LambdaVector {
    LambdaVector(alpha_slice.map(|a| if a >= c - ALPHA_TOL { 0.0 } else { a }))
}

/// Euclidean projection of `v` onto `{x : Σx = 1, 0 ≤ x ≤ c}`.
///
/// Sweeps the sorted breakpoints of the piecewise-linear function
/// `h(τ) = Σ clamp(vᵢ − τ, 0, c)` to find `h(τ) = 1`; O(n log n).
pub fn project_capped_simplex(v: &DVector<f64>, c: f64) -> DVector<f64> {
    let n = v.len();
    debug_assert!(c * n as f64 >= 1.0 - 1e-12);
    // (breakpoint, slope change while τ decreases through it)
    let mut points: Vec<(f64, i64)> = Vec::with_capacity(2 * n);
    for &x in v.iter() {
        points.push((x, 1));
        points.push((x - c, -1));
    }
    points.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut tau = points[0].0;
    let mut h = 0.0;
    let mut slope: i64 = 0;
    let mut found = None;
    for &(b, ds) in &points {
        let next_h = h + slope as f64 * (tau - b);
        if slope > 0 && next_h >= 1.0 {
            found = Some(tau - (1.0 - h) / slope as f64);
            break;
        }
        h = next_h;
        tau = b;
        slope += ds;
    }
    // capacity exactly 1: every entry ends up at the cap
    let tau = found.unwrap_or(tau);
    v.map(|x| (x - tau).clamp(0.0, c))
}

fn gershgorin_bound(g: &DMatrix<f64>) -> f64 {
    g.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Gradient of the minimization form `f(α) = αᵀGα − Σ αᵢ Gᵢᵢ`.
fn gradient(g: &DMatrix<f64>, alpha: &DVector<f64>) -> DVector<f64> {
    g * alpha * 2.0 - g.diagonal()
}

/// Largest pairwise violation `max_{α>0} gᵢ − min_{α<C} gᵢ`.
fn kkt_violation(grad: &DVector<f64>, alpha: &DVector<f64>, c: f64) -> (f64, usize, usize) {
    let mut up = (f64::INFINITY, usize::MAX);
    let mut low = (f64::NEG_INFINITY, usize::MAX);
    for i in 0..alpha.len() {
        if alpha[i] < c && grad[i] < up.0 {
            up = (grad[i], i);
        }
        if alpha[i] > 0.0 && grad[i] > low.0 {
            low = (grad[i], i);
        }
    }
    if up.1 == usize::MAX || low.1 == usize::MAX {
        return (0.0, 0, 0);
    }
    (low.0 - up.0, up.1, low.1)
}

/// Second index of the working pair: among `α > 0` entries whose gradient
/// exceeds `grad[i]`, the one with the largest quadratic gain.
fn second_order_partner(g: &DMatrix<f64>, grad: &DVector<f64>, alpha: &DVector<f64>, i: usize) -> Option<usize> {
    let mut best = (0.0, None);
    for j in 0..alpha.len() {
        let b = grad[j] - grad[i];
        if alpha[j] <= 0.0 || b <= 0.0 {
            continue;
        }
        let curvature = (g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]).max(1e-12);
        let gain = b * b / curvature;
        if gain > best.0 {
            best = (gain, Some(j));
        }
    }
    best.1
}

fn smo_polish(g: &DMatrix<f64>, alpha: &mut DVector<f64>, c: f64, tol: f64) -> f64 {
    let mut grad = gradient(g, alpha);
    for _ in 0..SMO_MAX_ITERS {
        let (gap, i, j_max) = kkt_violation(&grad, alpha, c);
        if gap < tol {
            break;
        }
        let j = second_order_partner(g, &grad, alpha, i).unwrap_or(j_max);
        let pair_gap = grad[j] - grad[i];
        let curvature = 2.0 * (g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]);
        let t_max = (c - alpha[i]).min(alpha[j]);
        let t = if curvature > f64::MIN_POSITIVE {
            (pair_gap / curvature).min(t_max)
        } else {
            t_max
        };
        alpha[i] += t;
        alpha[j] -= t;
        if c - alpha[i] <= 1e-15 {
            alpha[i] = c;
        }
        if alpha[j] <= 1e-15 {
            alpha[j] = 0.0;
        }
        for k in 0..alpha.len() {
            grad[k] += 2.0 * t * (g[(k, i)] - g[(k, j)]);
        }
    }
    let grad = gradient(g, alpha);
    kkt_violation(&grad, alpha, c).0.max(0.0)
}

/// Solves the SVDD dual for the pooled points with box bound `c`.
pub fn solve_dual(points: &PooledPoints, c: f64) -> Result<DualSolution> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, found: n });
    }
    if !(c > 0.0) || c * (n as f64) < 1.0 - 1e-12 {
        return Err(Error::InfeasibleC { c, points: n });
    }
    crate::numerics::ensure_finite(points.matrix(), "pooled points")?;
    let g = points.gram();
    let diag = g.diagonal();
    let scale = diag.iter().cloned().fold(1.0_f64, f64::max);

    let spread = (0..n)
        .map(|i| g[(i, i)] - 2.0 * g[(i, 0)] + g[(0, 0)])
        .fold(0.0_f64, f64::max);
    if spread <= 1e-20 * scale {
        let alpha = DVector::from_element(n, 1.0 / n as f64);
        let center_norm_sq = alpha.dot(&(&g * &alpha));
        let objective = alpha.dot(&diag) - center_norm_sq;
        let (support_idx, outlier_idx) = partition(&alpha, c);
        return Ok(DualSolution {
            alpha,
            c,
            support_idx,
            outlier_idx,
            r_squared: 0.0,
            objective,
            center_norm_sq,
            kkt_residual: 0.0,
            degenerate: true,
        });
    }

    let mut alpha = DVector::from_element(n, 1.0 / n as f64);
    let lipschitz = 2.0 * gershgorin_bound(&g);
    if lipschitz > 0.0 {
        let step = 1.0 / lipschitz;
        for _ in 0..PG_MAX_ITERS {
            let grad = gradient(&g, &alpha);
            if kkt_violation(&grad, &alpha, c).0 < PG_HANDOFF_TOL * scale {
                break;
            }
            let next = project_capped_simplex(&(&alpha - grad * step), c);
            let delta = (&next - &alpha).amax();
            alpha = next;
            if delta < 1e-12 {
                break;
            }
        }
    }
    let kkt_residual = smo_polish(&g, &mut alpha, c, KKT_TOL * scale);

    let center_norm_sq = alpha.dot(&(&g * &alpha));
    let objective = alpha.dot(&diag) - center_norm_sq;
    let (support_idx, outlier_idx) = partition(&alpha, c);
    let mut sol = DualSolution {
        alpha,
        c,
        support_idx,
        outlier_idx,
        r_squared: 0.0,
        objective,
        center_norm_sq,
        kkt_residual,
        degenerate: false,
    };
    sol.r_squared = radius_from_gram(&g, &sol);
    Ok(sol)
}

fn partition(alpha: &DVector<f64>, c: f64) -> (Vec<usize>, Vec<usize>) {
    let mut support = Vec::new();
    let mut outliers = Vec::new();
    for (i, &a) in alpha.iter().enumerate() {
        if a >= c - ALPHA_TOL {
            outliers.push(i);
        } else if a > ALPHA_TOL {
            support.push(i);
        }
    }
    (support, outliers)
}

fn radius_from_gram(g: &DMatrix<f64>, sol: &DualSolution) -> f64 {
    let ga = g * &sol.alpha;
    let dist = |v: usize| g[(v, v)] - 2.0 * ga[v] + sol.center_norm_sq;
    if sol.degenerate {
        return 0.0;
    }
    if !sol.support_idx.is_empty() {
        let total: f64 = sol.support_idx.iter().map(|&v| dist(v)).sum();
        return (total / sol.support_idx.len() as f64).max(0.0);
    }
    (0..sol.alpha.len())
        .filter(|&i| sol.alpha[i] > ALPHA_TOL)
        .map(dist)
        .fold(0.0_f64, f64::max)
}

/// Squared radius: the mean over strict support vectors of their distance to
/// the center. Without strict support vectors, the largest distance among
/// points with positive α.
pub fn radius_squared(points: &PooledPoints, sol: &DualSolution) -> f64 {
    radius_from_gram(&points.gram(), sol)
}

/// `‖y* − a‖²` through inner products with the training representations.
pub fn distance_to_center(y_star: &DVector<f64>, points: &PooledPoints, sol: &DualSolution) -> Result<f64> {
    if y_star.len() != points.dim() {
        return Err(Error::DimensionMismatch {
            expected: points.dim(),
            found: y_star.len(),
        });
    }
    let cross = points.matrix().tr_mul(y_star);
    Ok(y_star.dot(y_star) - 2.0 * sol.alpha.dot(&cross) + sol.center_norm_sq)
}

/// Inclusive boundary: a point exactly on the sphere is a target.
pub fn classify_point(distance2: f64, r2: f64) -> Label {
    if distance2 <= r2 {
        Label::Target
    } else {
        Label::Outlier
    }
}
