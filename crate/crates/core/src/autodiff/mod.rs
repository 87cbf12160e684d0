//! Dense rank-2 tensors with tape-based reverse-mode differentiation.
//!
//! ```
//! use graph_jepa::autodiff::{Tape, Tensor};
//!
//! let tape = Tape::new();
//! let x = tape.param(Tensor::row(&[1.0, 2.0]));
//! let loss = x.mul(&x).unwrap().sum_all().unwrap();
//! tape.backward(loss).unwrap();
//! assert_eq!(x.grad().unwrap().data(), &[2.0, 4.0]);
//! ```

mod adam;
mod backward;
pub mod gradcheck;
mod loss;
mod ops;
mod tape;
mod tensor;

pub use adam::Adam;
pub use loss::{smooth_l1, smooth_l1_element};
pub use tape::{Axis, Tape, Var};
pub use tensor::Tensor;

/// `out = op(a) * op(b)` without a tape.
pub(crate) fn tensor_gemm(a: &Tensor, ta: bool, b: &Tensor, tb: bool, out: &mut Tensor) {
    tensor::gemm(a, ta, b, tb, out, 0.0);
}

#[cfg(test)]
mod tests;
