//! Objective, gradients and the alternating training loop shared by the
//! linear and kernel variants.
//!
//! Everything here is written against generic per-modality inputs `Zₘ`
//! (rows × N) and projections `Sₘ` (d × rows): `Zₘ = Xₘ, Sₘ = Qₘ` for the
//! linear and NPT variants, `Zₘ = Kₘ, Sₘ = Wₘ` for the kernel variant. With α
//! frozen the augmented objective is
//!
//! ```text
//! L(S) = Σₘ Σᵢ αₘᵢ ‖Sₘ zₘᵢ‖² − ‖Σₘ Sₘ Zₘ αₘ‖² + β ω(S)
//! ```

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HyperParams;
use crate::svdd::{lambda_from_alpha, solve_dual, DualSolution, PooledPoints};

/// Maximum number of step halvings before an update is abandoned.
pub const MAX_STEP_HALVINGS: usize = 5;

/// Trace-form regularizer applied to the projection update.
///
/// The "own" variants only look at modality `m`; the "cross" variants sum
/// over all modality pairs. Weighting is by all items, by α (support vectors
/// and outliers), or by λ (support vectors only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Omega {
    /// ω0: no regularization.
    #[serde(rename = "w0")]
    None,
    /// ω1: `Σₘ tr(SₘZₘZₘᵀSₘᵀ)`.
    #[serde(rename = "w1")]
    Scatter,
    /// ω2: `Σₘ tr(SₘZₘαₘαₘᵀZₘᵀSₘᵀ)`.
    #[serde(rename = "w2")]
    AlphaScatter,
    /// ω3: as ω2 with λ in place of α.
    #[serde(rename = "w3")]
    SupportScatter,
    /// ω4: `Σₘ Σₙ tr(SₘZₘZₙᵀSₙᵀ)`.
    #[serde(rename = "w4")]
    CrossScatter,
    /// ω5: `Σₘ Σₙ tr(SₘZₘαₘαₙᵀZₙᵀSₙᵀ)`.
    #[serde(rename = "w5")]
    CrossAlphaScatter,
    /// ω6: as ω5 with λ in place of α.
    #[serde(rename = "w6")]
    CrossSupportScatter,
}

impl Omega {
    pub const ALL: [Omega; 7] = [
        Omega::None,
        Omega::Scatter,
        Omega::AlphaScatter,
        Omega::SupportScatter,
        Omega::CrossScatter,
        Omega::CrossAlphaScatter,
        Omega::CrossSupportScatter,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Omega> {
        Self::ALL.get(i).copied()
    }
}

impl fmt::Display for Omega {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.index())
    }
}

impl FromStr for Omega {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s
            .trim()
            .trim_start_matches("omega")
            .trim_start_matches('w')
            .trim_start_matches('ω');
        digits
            .parse::<usize>()
            .ok()
            .and_then(Omega::from_index)
            .ok_or_else(|| Error::InvalidParams(format!("unknown regularizer {s:?}")))
    }
}

/// α and λ split by modality.
#[derive(Debug, Clone)]
pub struct Weights {
    pub alphas: Vec<DVector<f64>>,
    pub lambdas: Vec<DVector<f64>>,
}

impl Weights {
    pub fn from_solution(sol: &DualSolution, modalities: usize, items: usize) -> Self {
        let alphas: Vec<_> = (0..modalities).map(|m| sol.alpha_slice(m, items)).collect();
        let lambdas = alphas.iter().map(|a| lambda_from_alpha(a, sol.c).0).collect();
        Self { alphas, lambdas }
    }
}

/// `Sₘ Zₘ` for every modality.
pub fn project_all(s: &[DMatrix<f64>], z: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
    s.iter()
        .zip(z)
        .map(|(sm, zm)| {
            if sm.ncols() != zm.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: sm.ncols(),
                    found: zm.nrows(),
                });
            }
            Ok(sm * zm)
        })
        .collect()
}

fn weighted_center(projected: &[DMatrix<f64>], w: &[DVector<f64>]) -> DVector<f64> {
    let d = projected[0].nrows();
    projected
        .iter()
        .zip(w)
        .fold(DVector::zeros(d), |acc, (y, a)| acc + y * a)
}

/// Value of the selected regularizer.
pub fn omega_value(
    omega: Omega,
    s: &[DMatrix<f64>],
    z: &[DMatrix<f64>],
    weights: &Weights,
) -> Result<f64> {
    let y = project_all(s, z)?;
    Ok(match omega {
        Omega::None => 0.0,
        Omega::Scatter => y.iter().map(|ym| ym.norm_squared()).sum(),
        Omega::AlphaScatter => y
            .iter()
            .zip(&weights.alphas)
            .map(|(ym, a)| (ym * a).norm_squared())
            .sum(),
        Omega::SupportScatter => y
            .iter()
            .zip(&weights.lambdas)
            .map(|(ym, l)| (ym * l).norm_squared())
            .sum(),
        Omega::CrossScatter => {
            let total = y.iter().skip(1).fold(y[0].clone(), |acc, ym| acc + ym);
            total.norm_squared()
        }
        Omega::CrossAlphaScatter => weighted_center(&y, &weights.alphas).norm_squared(),
        Omega::CrossSupportScatter => weighted_center(&y, &weights.lambdas).norm_squared(),
    })
}

/// Derivative of the selected regularizer with respect to `Sₘ`.
pub fn omega_gradient(
    omega: Omega,
    m: usize,
    s: &[DMatrix<f64>],
    z: &[DMatrix<f64>],
    weights: &Weights,
) -> Result<DMatrix<f64>> {
    let zm = &z[m];
    let rows = zm.nrows();
    let d = s[m].nrows();
    let grad = match omega {
        Omega::None => DMatrix::zeros(d, rows),
        Omega::Scatter => (&s[m] * zm) * zm.transpose() * 2.0,
        Omega::AlphaScatter => {
            let a = &weights.alphas[m];
            (&s[m] * (zm * a)) * (zm * a).transpose() * 2.0
        }
        Omega::SupportScatter => {
            let l = &weights.lambdas[m];
            (&s[m] * (zm * l)) * (zm * l).transpose() * 2.0
        }
        Omega::CrossScatter => {
            let y = project_all(s, z)?;
            let total = y.iter().skip(1).fold(y[0].clone(), |acc, yn| acc + yn);
            total * zm.transpose() * 2.0
        }
        Omega::CrossAlphaScatter => {
            let y = project_all(s, z)?;
            weighted_center(&y, &weights.alphas) * (zm * &weights.alphas[m]).transpose() * 2.0
        }
        Omega::CrossSupportScatter => {
            let y = project_all(s, z)?;
            weighted_center(&y, &weights.lambdas) * (zm * &weights.lambdas[m]).transpose() * 2.0
        }
    };
    Ok(grad)
}

/// Gradient of the first two objective terms with respect to `Sₘ`:
/// `2 Sₘ Zₘ diag(αₘ) Zₘᵀ − 2 a (Zₘαₘ)ᵀ` where `a = Σₙ SₙZₙαₙ`.
pub fn main_gradient(
    m: usize,
    s: &[DMatrix<f64>],
    z: &[DMatrix<f64>],
    alphas: &[DVector<f64>],
) -> Result<DMatrix<f64>> {
    let y = project_all(s, z)?;
    let zm = &z[m];
    let am = &alphas[m];
    let mut scaled = y[m].clone();
    for (mut col, &a) in scaled.column_iter_mut().zip(am.iter()) {
        col *= a;
    }
    let center = weighted_center(&y, alphas);
    Ok(scaled * zm.transpose() * 2.0 - center * (zm * am).transpose() * 2.0)
}

/// Full augmented objective with α (and λ) frozen.
pub fn augmented_objective(
    s: &[DMatrix<f64>],
    z: &[DMatrix<f64>],
    weights: &Weights,
    omega: Omega,
    beta: f64,
) -> Result<f64> {
    let y = project_all(s, z)?;
    let mut first = 0.0;
    for (ym, am) in y.iter().zip(&weights.alphas) {
        for (col, &a) in ym.column_iter().zip(am.iter()) {
            first += a * col.norm_squared();
        }
    }
    let center = weighted_center(&y, &weights.alphas);
    Ok(first - center.norm_squared() + beta * omega_value(omega, s, z, weights)?)
}

/// Snapshot handed to training observers after every iteration's update.
pub struct IterationRecord<'a> {
    pub iteration: usize,
    /// Projections after this iteration's update.
    pub projections: &'a [DMatrix<f64>],
    /// Description solved at the start of this iteration.
    pub solution: &'a DualSolution,
    /// The inputs `Zₘ` the projections act on.
    pub inputs: &'a [DMatrix<f64>],
}

pub type Observer<'o> = &'o mut dyn FnMut(&IterationRecord<'_>);

/// Result of the alternating optimization.
pub struct Trained {
    pub projections: Vec<DMatrix<f64>>,
    pub points: PooledPoints,
    pub solution: DualSolution,
}

fn is_retraction_failure(e: &Error) -> bool {
    matches!(e, Error::RankDeficient { .. } | Error::DegenerateProjection)
}

/// Runs the alternating optimization starting from `init`.
///
/// Each iteration: project every modality, solve the pooled description,
/// then for each modality in turn take one gradient step of size η on the
/// augmented objective and retract. A step whose retraction fails is halved
/// up to [`MAX_STEP_HALVINGS`] times before the previous projection is kept.
/// After the loop the description is solved once more for the final projections.
pub fn alternate<R>(
    z: &[DMatrix<f64>],
    init: Vec<DMatrix<f64>>,
    params: &HyperParams,
    retract: R,
    mut observer: Option<Observer<'_>>,
) -> Result<Trained>
where
    R: Fn(usize, &DMatrix<f64>) -> Result<DMatrix<f64>>,
{
    let modalities = z.len();
    let items = z.first().map(|zm| zm.ncols()).unwrap_or(0);
    let mut s = init;

    for iteration in 0..params.max_iter {
        let points = PooledPoints::from_blocks(&project_all(&s, z)?)?;
        let solution = solve_dual(&points, params.c)?;
        let weights = Weights::from_solution(&solution, modalities, items);

        for m in 0..modalities {
            let mut grad = main_gradient(m, &s, z, &weights.alphas)?;
            if params.beta != 0.0 {
                grad += omega_gradient(params.omega, m, &s, z, &weights)? * params.beta;
            }
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    iteration,
                    modality: m,
                });
            }
            let mut step = params.eta;
            let mut updated = None;
            for _ in 0..=MAX_STEP_HALVINGS {
                match retract(m, &(&s[m] - &grad * step)) {
                    Ok(next) => {
                        updated = Some(next);
                        break;
                    }
                    Err(e) if is_retraction_failure(&e) => step *= 0.5,
                    Err(e) => return Err(e),
                }
            }
            match updated {
                Some(next) => s[m] = next,
                None => log::warn!(
                    "iteration {iteration}, modality {m}: retraction failed after {MAX_STEP_HALVINGS} halvings, keeping previous projection"
                ),
            }
        }

        if let Some(obs) = observer.as_mut() {
            obs(&IterationRecord {
                iteration,
                projections: &s,
                solution: &solution,
                inputs: z,
            });
        }
    }

    let points = PooledPoints::from_blocks(&project_all(&s, z)?)?;
    let solution = solve_dual(&points, params.c)?;
    Ok(Trained {
        projections: s,
        points,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn omega_names_round_trip() {
        for o in Omega::ALL {
            assert_eq!(o.to_string().parse::<Omega>().unwrap(), o);
        }
        assert_eq!("omega5".parse::<Omega>().unwrap(), Omega::CrossAlphaScatter);
        assert!("w7".parse::<Omega>().is_err());
    }

    /// Loop form of ω4 against the closed form.
    #[test]
    fn cross_scatter_matches_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z: Vec<_> = (0..2).map(|_| DMatrix::from_fn(4, 5, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let s: Vec<_> = (0..2).map(|_| DMatrix::from_fn(2, 4, |_, _| rng.gen_range(-1.0..1.0))).collect();
        let w = Weights {
            alphas: vec![DVector::from_element(5, 0.1); 2],
            lambdas: vec![DVector::from_element(5, 0.1); 2],
        };
        let mut expected = 0.0;
        for m in 0..2 {
            for n in 0..2 {
                expected += (&s[m] * &z[m] * z[n].transpose() * s[n].transpose()).trace();
            }
        }
        let got = omega_value(Omega::CrossScatter, &s, &z, &w).unwrap();
        assert!((got - expected).abs() < 1e-10);
    }

    #[test]
    fn main_gradient_vanishes_for_single_point() {
        let z = vec![DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5])];
        let s = vec![DMatrix::from_row_slice(1, 3, &[0.3, 0.1, -0.7])];
        let g = main_gradient(0, &s, &z, &[DVector::from_element(1, 1.0)]).unwrap();
        assert!(g.amax() < 1e-14);
    }
}
