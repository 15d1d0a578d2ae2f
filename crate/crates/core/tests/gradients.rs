use mssvdd::kernel::{kernel_main_gradient, rbf_kernel};
use mssvdd::subspace::{augmented_objective, main_gradient, omega_gradient, omega_value, Omega, Weights};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;

fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random α on the capped simplex with one entry at the cap.
fn weights(rng: &mut ChaCha8Rng, modalities: usize, items: usize) -> (Weights, f64) {
    let n = modalities * items;
    let c = 2.0 / n as f64;
    let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let s: f64 = a.iter().sum();
    a.iter_mut().for_each(|x| *x *= (1.0 - c) / s);
    a[0] = c;
    let lambda: Vec<f64> = a.iter().enumerate().map(|(i, &x)| if i == 0 { 0.0 } else { x }).collect();
    let split = |v: &[f64]| -> Vec<DVector<f64>> {
        (0..modalities).map(|m| DVector::from_column_slice(&v[m * items..(m + 1) * items])).collect()
    };
    (
        Weights {
            alphas: split(&a),
            lambdas: split(&lambda),
        },
        c,
    )
}

fn central_difference<F: Fn(&[DMatrix<f64>]) -> f64>(f: F, s: &[DMatrix<f64>], m: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(s[m].nrows(), s[m].ncols());
    for i in 0..s[m].nrows() {
        for j in 0..s[m].ncols() {
            let mut plus = s.to_vec();
            let mut minus = s.to_vec();
            plus[m][(i, j)] += H;
            minus[m][(i, j)] -= H;
            g[(i, j)] = (f(&plus) - f(&minus)) / (2.0 * H);
        }
    }
    g
}

fn relative_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    (analytic - numeric).norm() / numeric.norm().max(analytic.norm()).max(1e-8)
}

#[test]
fn regularizer_gradients_match_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for omega in Omega::ALL {
        for _ in 0..5 {
            let (mm, n, rows, d) = (rng.gen_range(1..4), rng.gen_range(2..6), rng.gen_range(2..5), 2);
            let z: Vec<_> = (0..mm).map(|_| random(&mut rng, rows, n)).collect();
            let s: Vec<_> = (0..mm).map(|_| random(&mut rng, d, rows)).collect();
            let (w, _) = weights(&mut rng, mm, n);
            for m in 0..mm {
                let g = omega_gradient(omega, m, &s, &z, &w).unwrap();
                let fd = central_difference(|s| omega_value(omega, s, &z, &w).unwrap(), &s, m);
                if omega == Omega::None {
                    assert_eq!(g.amax(), 0.0);
                } else {
                    assert!(relative_error(&g, &fd) < 1e-4, "{omega}: {}", relative_error(&g, &fd));
                }
            }
        }
    }
}

#[test]
fn main_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let (mm, n, rows, d) = (rng.gen_range(1..4), rng.gen_range(2..6), rng.gen_range(2..5), rng.gen_range(1..3));
        let z: Vec<_> = (0..mm).map(|_| random(&mut rng, rows, n)).collect();
        let s: Vec<_> = (0..mm).map(|_| random(&mut rng, d, rows)).collect();
        let (w, _) = weights(&mut rng, mm, n);
        for m in 0..mm {
            let g = main_gradient(m, &s, &z, &w.alphas).unwrap();
            let fd = central_difference(|s| augmented_objective(s, &z, &w, Omega::None, 0.0).unwrap(), &s, m);
            assert!(relative_error(&g, &fd) < 1e-4);
        }
    }
}

#[test]
fn kernel_objective_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for omega in Omega::ALL {
        let (mm, n, d) = (2, 5, 2);
        let ks: Vec<_> = (0..mm)
            .map(|_| rbf_kernel(&random(&mut rng, 3, n), &random(&mut rng, 3, n), 1.0).unwrap())
            .map(|k| {
                let sym = (&k + k.transpose()) * 0.5;
                sym
            })
            .collect();
        let ws: Vec<_> = (0..mm).map(|_| random(&mut rng, d, n)).collect();
        let (w, _) = weights(&mut rng, mm, n);
        let beta = 0.7;
        for m in 0..mm {
            let g = kernel_main_gradient(m, &ws, &ks, &w.alphas).unwrap()
                + omega_gradient(omega, m, &ws, &ks, &w).unwrap() * beta;
            let fd = central_difference(|s| augmented_objective(s, &ks, &w, omega, beta).unwrap(), &ws, m);
            assert!(relative_error(&g, &fd) < 1e-4, "{omega}");
        }
    }
}
