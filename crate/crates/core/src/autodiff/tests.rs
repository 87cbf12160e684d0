use super::gradcheck::check;
use super::*;
use crate::error::Error;

fn t(rows: usize, cols: usize, data: &[f64]) -> Tensor {
    Tensor::new(rows, cols, data.to_vec()).unwrap()
}

#[test]
fn cosh_of_zero_is_one() {
    let tape = Tape::new();
    let a = tape.param(Tensor::scalar(0.0));
    let y = a.cosh().unwrap();
    assert_eq!(y.item(), 1.0);
    tape.backward(y).unwrap();
    assert_eq!(a.grad().unwrap().item(), 0.0);
}

#[test]
fn layer_norm_of_constant_row_is_zero() {
    let tape = Tape::new();
    let x = tape.constant(Tensor::full(1, 5, 3.25));
    let y = x.layer_norm(1e-5).unwrap();
    assert!(y.value().data().iter().all(|&v| v == 0.0));
}

#[test]
fn scatter_add_accumulates_duplicates() {
    let tape = Tape::new();
    let x = tape.constant(t(2, 2, &[1.0, 2.0, 10.0, 20.0]));
    let y = x.scatter_add(&[0, 0], 2).unwrap();
    assert_eq!(y.value().data(), &[11.0, 22.0, 0.0, 0.0]);
}

#[test]
fn sum_of_squares_gradient() {
    let tape = Tape::new();
    let x = tape.param(Tensor::row(&[1.0, 2.0]));
    let loss = x.mul(&x).unwrap().sum_all().unwrap();
    tape.backward(loss).unwrap();
    assert_eq!(x.grad().unwrap().data(), &[2.0, 4.0]);
}

#[test]
fn backward_requires_scalar() {
    let tape = Tape::new();
    let x = tape.param(Tensor::row(&[1.0, 2.0]));
    assert!(matches!(tape.backward(x), Err(Error::Shape { .. })));
}

#[test]
fn backward_runs_once_per_tape() {
    let tape = Tape::new();
    let x = tape.param(Tensor::scalar(2.0));
    let y = x.square().unwrap();
    tape.backward(y).unwrap();
    assert!(tape.backward(y).is_err());
}

#[test]
fn stop_gradient_blocks_flow() {
    let tape = Tape::new();
    let x = tape.param(Tensor::row(&[1.0, -1.0, 4.0]));
    let loss = x.stop_gradient().sum_all().unwrap();
    tape.backward(loss).unwrap();
    assert!(x.grad().is_none());

    let tape = Tape::new();
    let x = tape.param(Tensor::row(&[1.0, -1.0, 4.0]));
    let loss = x.add(&x.stop_gradient()).unwrap().sum_all().unwrap();
    tape.backward(loss).unwrap();
    assert_eq!(x.grad().unwrap().data(), &[1.0, 1.0, 1.0]);
}

#[test]
fn shape_mismatch_reports_both_shapes() {
    let tape = Tape::new();
    let a = tape.constant(Tensor::zeros(2, 3));
    let b = tape.constant(Tensor::zeros(2, 3));
    match a.matmul(&b) {
        Err(Error::Shape { lhs, rhs, .. }) => {
            assert_eq!(lhs, vec![2, 3]);
            assert_eq!(rhs, vec![2, 3]);
        }
        other => panic!("expected shape error, got {other:?}"),
    }
    let c = tape.constant(Tensor::zeros(3, 2));
    assert!(a.add(&c).is_err());
}

#[cfg(debug_assertions)]
#[test]
fn nan_inputs_are_rejected() {
    let tape = Tape::new();
    let a = tape.constant(Tensor::row(&[f64::NAN, 1.0]));
    assert!(matches!(a.relu(), Err(Error::NonFinite(_))));
}

#[test]
fn broadcasting_add_and_its_gradient() {
    let tape = Tape::new();
    let x = tape.param(t(2, 3, &[1., 2., 3., 4., 5., 6.]));
    let b = tape.param(Tensor::row(&[10., 20., 30.]));
    let y = x.add(&b).unwrap();
    assert_eq!(y.value().row_slice(1), &[14., 25., 36.]);
    tape.backward(y.sum_all().unwrap()).unwrap();
    assert_eq!(b.grad().unwrap().data(), &[2., 2., 2.]);
}

#[test]
fn softmax_rows_sum_to_one() {
    let tape = Tape::new();
    let x = tape.constant(t(2, 3, &[1., 2., 3., -1., 0., 5.]));
    let y = x.softmax(Axis::Cols).unwrap();
    for r in 0..2 {
        let s: f64 = y.value().row_slice(r).iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }
    let z = x.softmax(Axis::Rows).unwrap();
    for c in 0..3 {
        let s = z.value().get(0, c) + z.value().get(1, c);
        assert!((s - 1.0).abs() < 1e-15);
    }
}

#[test]
fn concat_and_index_select() {
    let tape = Tape::new();
    let a = tape.constant(t(1, 2, &[1., 2.]));
    let b = tape.constant(t(2, 2, &[3., 4., 5., 6.]));
    let c = tape.concat(&[a, b], Axis::Rows).unwrap();
    assert_eq!(c.shape(), [3, 2]);
    let s = c.index_select(&[2, 0]).unwrap();
    assert_eq!(s.value().data(), &[5., 6., 1., 2.]);
    let d = tape.concat(&[b, b], Axis::Cols).unwrap();
    assert_eq!(d.value().row_slice(0), &[3., 4., 3., 4.]);
}

#[test]
fn small_op_gradchecks() {
    let x = t(2, 3, &[0.3, -0.7, 0.2, 0.9, -0.4, 0.55]);
    let w = t(3, 2, &[0.1, -0.2, 0.4, 0.3, -0.5, 0.8]);
    let r = check(&[x.clone(), w], 1e-5, |_, v| {
        v[0].matmul(&v[1])?.gelu()?.softmax(Axis::Cols)?.square()?.sum_all()
    })
    .unwrap();
    assert!(r.max_rel_error < 1e-6, "{r:?}");

    let r = check(&[x.clone()], 1e-5, |_, v| {
        v[0].layer_norm(1e-5)?.mul(&v[0])?.max(Axis::Rows)?.sum_all()
    })
    .unwrap();
    assert!(r.max_rel_error < 1e-6, "{r:?}");

    let r = check(&[x], 1e-5, |tape, v| {
        let a = v[0].index_select(&[1, 0, 1])?.scatter_add(&[0, 0, 1], 2)?;
        let b = tape.concat(&[a, v[0]], Axis::Cols)?;
        b.cosh()?.mean(Axis::Rows)?.sinh()?.sum_all()
    })
    .unwrap();
    assert!(r.max_rel_error < 1e-6, "{r:?}");
}
