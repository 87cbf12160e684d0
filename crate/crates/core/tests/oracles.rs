//! Numerical routines checked against nalgebra or hand-derived values.

use graph_jepa::autodiff::{Tape, Tensor};
use graph_jepa::jepa::{alt_loss_poincare, effective_rank, hyperbolic_target, jepa_loss, ols_solve};
use graph_jepa::linalg::singular_values;
use graph_jepa::probe::ridge_fit;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rows: usize, cols: usize, seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::new(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn to_na(t: &Tensor) -> DMatrix<f64> {
    DMatrix::from_row_slice(t.rows(), t.cols(), t.data())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn singular_values_match_nalgebra() {
    for (i, (r, c)) in [(7, 3), (3, 7), (12, 12), (40, 5)].into_iter().enumerate() {
        let x = random(r, c, i as u64);
        let mut ours = singular_values(&x);
        ours.sort_by(|a, b| b.total_cmp(a));
        let mut theirs: Vec<f64> = to_na(&x).singular_values().iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in ours.iter().zip(&theirs) {
            assert!(close(*a, *b, 1e-9), "{r}x{c}: {a} vs {b}");
        }
        let total: f64 = theirs.iter().sum();
        let entropy: f64 = theirs.iter().map(|s| s / total).filter(|p| *p > 0.0).map(|p| -p * p.ln()).sum();
        assert!(close(effective_rank(&x), entropy.exp(), 1e-9));
    }
}

#[test]
fn effective_rank_of_identical_rows_is_one() {
    let row = [0.3, -1.2, 2.0, 0.7];
    let x = Tensor::new(6, 4, row.iter().copied().cycle().take(24).collect()).unwrap();
    assert!((effective_rank(&x) - 1.0).abs() < 1e-9);
    let eye = Tensor::new(3, 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
    assert!((effective_rank(&eye) - 3.0).abs() < 1e-12);
}

#[test]
fn hyperbola_point_of_unit_row() {
    let t = hyperbolic_target(&Tensor::full(1, 5, 1.0));
    assert!((t.psi.get(0, 0) - 1.0f64.cosh()).abs() < 1e-15);
    assert!((t.psi.get(0, 1) - 1.0f64.sinh()).abs() < 1e-15);
    assert!((t.psi.get(0, 0) - 1.5430806348).abs() < 1e-9);
    assert!((t.psi.get(0, 1) - 1.1752011936).abs() < 1e-9);
}

#[test]
fn smooth_l1_loss_worked_example() {
    // One target at angle 0, so psi = (1, 0). Errors 1.5 and 1.0 with beta 1
    // give 1.0 and 0.5.
    let tape = Tape::new();
    let target = hyperbolic_target(&Tensor::zeros(1, 3));
    let pred = tape.constant(Tensor::new(1, 2, vec![2.5, 1.0]).unwrap());
    let loss = jepa_loss(&pred, &target, 1.0).unwrap();
    assert!((loss.value().get(0, 0) - 0.75).abs() < 1e-15);
}

#[test]
fn poincare_distance_worked_example() {
    // Raw (1, 0) maps to (0.5, 0) in the ball; the origin stays put.
    // acosh(1 + 2 * 0.25 / 0.75) = acosh(5/3) = ln 3.
    let tape = Tape::new();
    let u = tape.constant(Tensor::new(1, 2, vec![1.0, 0.0]).unwrap());
    let v = tape.constant(Tensor::zeros(1, 2));
    let out = alt_loss_poincare(&u, &v).unwrap();
    assert!((out.loss.value().get(0, 0) - 3.0f64.ln()).abs() < 1e-12);
    assert_eq!(out.clamped, 0);
}

fn ridge_oracle(x: &Tensor, y: &Tensor, lambda: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (xm, ym) = (to_na(x), to_na(y));
    let xbar = xm.row_mean();
    let ybar = ym.row_mean();
    let xc = DMatrix::from_fn(xm.nrows(), xm.ncols(), |i, j| xm[(i, j)] - xbar[j]);
    let yc = DMatrix::from_fn(ym.nrows(), ym.ncols(), |i, j| ym[(i, j)] - ybar[j]);
    let a = xc.transpose() * &xc + DMatrix::identity(x.cols(), x.cols()) * lambda;
    let w = a.lu().solve(&(xc.transpose() * yc)).unwrap();
    let b = DMatrix::from_fn(1, y.cols(), |_, j| ybar[j] - (xbar.clone() * &w)[(0, j)]);
    (w, b)
}

#[test]
fn ridge_matches_normal_equations() {
    let x = random(30, 6, 11);
    let y = random(30, 2, 12);
    for lambda in [1e-3, 0.1, 10.0] {
        let fit = ridge_fit(&x, &y, lambda).unwrap();
        let (w, b) = ridge_oracle(&x, &y, lambda);
        for i in 0..6 {
            for j in 0..2 {
                assert!((fit.weights.get(i, j) - w[(i, j)]).abs() < 1e-8);
            }
        }
        for j in 0..2 {
            assert!((fit.bias[j] - b[(0, j)]).abs() < 1e-8);
        }
    }
}

#[test]
fn ridge_matches_gradient_descent() {
    let x = random(25, 4, 21);
    let y = random(25, 1, 22);
    let lambda = 0.5;
    let fit = ridge_fit(&x, &y, lambda).unwrap();
    let (n, d) = (x.rows(), x.cols());
    let (mut w, mut b) = (vec![0.0; d], 0.0);
    let step = 1e-2;
    for _ in 0..20_000 {
        let mut gw: Vec<f64> = w.iter().map(|wi| 2.0 * lambda * wi).collect();
        let mut gb = 0.0;
        for r in 0..n {
            let row = x.row_slice(r);
            let err = row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b - y.get(r, 0);
            for (g, a) in gw.iter_mut().zip(row) {
                *g += 2.0 * err * a;
            }
            gb += 2.0 * err;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= step * g;
        }
        b -= step * gb;
    }
    for i in 0..d {
        assert!((fit.weights.get(i, 0) - w[i]).abs() < 1e-5, "{} vs {}", fit.weights.get(i, 0), w[i]);
    }
    assert!((fit.bias[0] - b).abs() < 1e-5);
}

#[test]
fn least_squares_reference_cases() {
    // Identity design reproduces Y exactly.
    let eye = Tensor::new(3, 3, vec![1., 0., 0., 0., 1., 0., 0., 0., 1.]).unwrap();
    let y = random(3, 2, 31);
    let sol = ols_solve(&eye, &y).unwrap();
    assert!(sol.residual < 1e-24 && !sol.regularized);

    // Y inside the column space of X has zero residual.
    let x = random(20, 3, 32);
    let w_true = random(3, 2, 33);
    let y = x.matmul(&w_true).unwrap();
    let sol = ols_solve(&x, &y).unwrap();
    assert!(sol.residual < 1e-20);
    for (a, b) in sol.w.data().iter().zip(w_true.data()) {
        assert!((a - b).abs() < 1e-10);
    }

    // Y orthogonal to the columns of X keeps all of its norm.
    let x = Tensor::new(4, 2, vec![1., 0., 0., 1., 0., 0., 0., 0.]).unwrap();
    let y = Tensor::new(4, 1, vec![0., 0., 3., 4.]).unwrap();
    let sol = ols_solve(&x, &y).unwrap();
    assert!((sol.residual - 25.0).abs() < 1e-12);
    assert!(sol.w.data().iter().all(|v| v.abs() < 1e-12));

    // Matches nalgebra's least-squares solve on a random design.
    let x = random(15, 4, 34);
    let y = random(15, 3, 35);
    let sol = ols_solve(&x, &y).unwrap();
    let xm = to_na(&x);
    let w = (xm.transpose() * &xm).lu().solve(&(xm.transpose() * to_na(&y))).unwrap();
    for i in 0..4 {
        for j in 0..3 {
            assert!((sol.w.get(i, j) - w[(i, j)]).abs() < 1e-10);
        }
    }
}
