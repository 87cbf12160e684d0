//! Small dense solvers used by the probes and the collapse analysis.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Lower Cholesky factor of a symmetric positive definite matrix, or `None`
/// if a pivot is not strictly positive.
pub fn cholesky(a: &Tensor) -> Option<Tensor> {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    let mut l = Tensor::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l.set(j, j, d);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / d);
        }
    }
    Some(l)
}

/// Solves `L Lᵀ X = B` given the lower factor `L`.
pub fn cholesky_solve(l: &Tensor, b: &Tensor) -> Tensor {
    let n = l.rows();
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x.get(i, c);
            for k in 0..i {
                s -= l.get(i, k) * x.get(k, c);
            }
            x.set(i, c, s / l.get(i, i));
        }
        for i in (0..n).rev() {
            let mut s = x.get(i, c);
            for k in i + 1..n {
                s -= l.get(k, i) * x.get(k, c);
            }
            x.set(i, c, s / l.get(i, i));
        }
    }
    x
}

/// Solves the SPD system `A X = B`.
pub fn spd_solve(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.rows() != a.cols() || a.rows() != b.rows() {
        return Err(Error::shape("spd_solve", &a.shape(), &b.shape()));
    }
    let l = cholesky(a).ok_or_else(|| Error::InvalidArgument("matrix is not positive definite".into()))?;
    Ok(cholesky_solve(&l, b))
}

/// `XᵀX`.
pub fn gram(x: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(x.cols(), x.cols());
    crate::autodiff::tensor_gemm(x, true, x, false, &mut out);
    out
}

/// `XᵀY`.
pub fn xty(x: &Tensor, y: &Tensor) -> Result<Tensor> {
    if x.rows() != y.rows() {
        return Err(Error::shape("xty", &x.shape(), &y.shape()));
    }
    let mut out = Tensor::zeros(x.cols(), y.cols());
    crate::autodiff::tensor_gemm(x, true, y, false, &mut out);
    Ok(out)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted
/// in descending order.
pub fn symmetric_eigenvalues(a: &Tensor) -> Vec<f64> {
    let n = a.rows();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m.get(i, j).powi(2))
            .sum();
        let scale: f64 = m.frobenius_sq();
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (m.get(p, p), m.get(q, q));
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m.get(k, p), m.get(k, q));
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let (mpk, mqk) = (m.get(p, k), m.get(q, k));
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Singular values of `x`, descending, from the smaller Gram matrix.
pub fn singular_values(x: &Tensor) -> Vec<f64> {
    let g = if x.rows() < x.cols() {
        gram(&x.transpose())
    } else {
        gram(x)
    };
    symmetric_eigenvalues(&g).into_iter().map(|v| v.max(0.0).sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Tensor::new(3, 3, vec![4., 1., 0.5, 1., 3., 0.2, 0.5, 0.2, 2.]).unwrap();
        let b = Tensor::new(3, 1, vec![1., 2., 3.]).unwrap();
        let x = spd_solve(&a, &b).unwrap();
        let back = a.matmul(&x).unwrap();
        for (u, v) in back.data().iter().zip(b.data()) {
            assert!((u - v).abs() < 1e-12);
        }
        assert!(cholesky(&Tensor::new(2, 2, vec![1., 2., 2., 1.]).unwrap()).is_none());
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let a = Tensor::new(2, 2, vec![2., 1., 1., 2.]).unwrap();
        let ev = symmetric_eigenvalues(&a);
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
        let x = Tensor::new(2, 3, vec![3., 0., 0., 0., 2., 0.]).unwrap();
        let sv = singular_values(&x);
        assert!((sv[0] - 3.0).abs() < 1e-12 && (sv[1] - 2.0).abs() < 1e-12);
    }
}
