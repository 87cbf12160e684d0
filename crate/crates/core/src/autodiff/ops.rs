//! Forward rules for every differentiable operation.

use super::tape::{Axis, BinaryKind, Op, Reduction, Tape, UnaryKind, Var};
use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_C: f64 = 0.044_715;

pub(crate) fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + GELU_C * x * x * x)).tanh())
}

pub(crate) fn gelu_grad(x: f64) -> f64 {
    let inner = SQRT_2_OVER_PI * (x + GELU_C * x * x * x);
    let t = inner.tanh();
    let dinner = SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_C * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner
}

fn check_nan(op: &'static str, t: &Tensor) -> Result<()> {
    if cfg!(debug_assertions) && t.data().iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite(op));
    }
    Ok(())
}

fn same_tape(op: &'static str, a: &Var<'_>, b: &Var<'_>) -> Result<()> {
    if std::ptr::eq(a.tape, b.tape) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{op}: operands live on different tapes")))
    }
}

/// Output shape of a two-operand elementwise op with row/column broadcasting.
pub(crate) fn broadcast_shape(op: &'static str, a: [usize; 2], b: [usize; 2]) -> Result<[usize; 2]> {
    let dim = |x: usize, y: usize| -> Option<usize> {
        if x == y {
            Some(x)
        } else if x == 1 {
            Some(y)
        } else if y == 1 {
            Some(x)
        } else {
            None
        }
    };
    match (dim(a[0], b[0]), dim(a[1], b[1])) {
        (Some(r), Some(c)) => Ok([r, c]),
        _ => Err(Error::shape(op, &a, &b)),
    }
}

#[inline]
pub(crate) fn bidx(shape: [usize; 2], r: usize, c: usize) -> usize {
    let rr = if shape[0] == 1 { 0 } else { r };
    let cc = if shape[1] == 1 { 0 } else { c };
    rr * shape[1] + cc
}

impl<'t> Var<'t> {
    fn unary(&self, kind: UnaryKind, name: &'static str) -> Result<Var<'t>> {
        let (out, rg) = {
            let x = self.value();
            check_nan(name, &x)?;
            let out = x.map(|v| match kind {
                UnaryKind::Relu => v.max(0.0),
                UnaryKind::Gelu => gelu(v),
                UnaryKind::Exp => v.exp(),
                UnaryKind::Log => v.ln(),
                UnaryKind::Sqrt => v.sqrt(),
                UnaryKind::Cosh => v.cosh(),
                UnaryKind::Sinh => v.sinh(),
                UnaryKind::Tanh => v.tanh(),
                UnaryKind::Acosh => v.acosh(),
                UnaryKind::Square => v * v,
                UnaryKind::Abs => v.abs(),
                UnaryKind::ClampMin(m) => v.max(m),
            });
            (out, self.requires_grad())
        };
        Ok(self.tape.push(out, Op::Unary(kind, self.id), rg))
    }

    pub fn relu(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Relu, "relu")
    }

    /// Tanh approximation of the Gaussian error linear unit.
    pub fn gelu(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Gelu, "gelu")
    }

    pub fn exp(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Exp, "exp")
    }

    pub fn log(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Log, "log")
    }

    pub fn sqrt(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Sqrt, "sqrt")
    }

    pub fn cosh(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Cosh, "cosh")
    }

    pub fn sinh(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Sinh, "sinh")
    }

    pub fn tanh(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Tanh, "tanh")
    }

    pub fn acosh(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Acosh, "acosh")
    }

    pub fn square(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Square, "square")
    }

    pub fn abs(&self) -> Result<Var<'t>> {
        self.unary(UnaryKind::Abs, "abs")
    }

    /// `max(x, min)` elementwise; gradient passes where `x > min`.
    pub fn clamp_min(&self, min: f64) -> Result<Var<'t>> {
        self.unary(UnaryKind::ClampMin(min), "clamp_min")
    }

    /// `scale * x + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Var<'t>> {
        let (out, rg) = {
            let x = self.value();
            check_nan("affine", &x)?;
            (x.map(|v| scale * v + shift), self.requires_grad())
        };
        Ok(self.tape.push(out, Op::Affine { input: self.id, scale }, rg))
    }

    pub fn scale(&self, scale: f64) -> Result<Var<'t>> {
        self.affine(scale, 0.0)
    }

    pub fn add_scalar(&self, shift: f64) -> Result<Var<'t>> {
        self.affine(1.0, shift)
    }

    fn binary(&self, other: &Var<'t>, kind: BinaryKind, name: &'static str) -> Result<Var<'t>> {
        same_tape(name, self, other)?;
        let (out, rg) = {
            let a = self.value();
            let b = other.value();
            check_nan(name, &a)?;
            check_nan(name, &b)?;
            let [r, c] = broadcast_shape(name, a.shape(), b.shape())?;
            let (sa, sb) = (a.shape(), b.shape());
            let (ad, bd) = (a.data(), b.data());
            let mut out = Vec::with_capacity(r * c);
            if sa == sb {
                out.extend(ad.iter().zip(bd).map(|(&x, &y)| apply(kind, x, y)));
            } else {
                for i in 0..r {
                    for j in 0..c {
                        out.push(apply(kind, ad[bidx(sa, i, j)], bd[bidx(sb, i, j)]));
                    }
                }
            }
            (
                Tensor::new(r, c, out)?,
                self.requires_grad() || other.requires_grad(),
            )
        };
        Ok(self.tape.push(out, Op::Binary(kind, self.id, other.id), rg))
    }

    /// Elementwise sum; either operand may broadcast along a size-1 axis.
    pub fn add(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.binary(other, BinaryKind::Add, "add")
    }

    pub fn sub(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.binary(other, BinaryKind::Sub, "sub")
    }

    pub fn mul(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.binary(other, BinaryKind::Mul, "mul")
    }

    pub fn div(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.binary(other, BinaryKind::Div, "div")
    }

    pub fn matmul(&self, other: &Var<'t>) -> Result<Var<'t>> {
        same_tape("matmul", self, other)?;
        let (out, rg) = {
            let a = self.value();
            let b = other.value();
            check_nan("matmul", &a)?;
            check_nan("matmul", &b)?;
            if a.cols() != b.rows() {
                return Err(Error::shape("matmul", &a.shape(), &b.shape()));
            }
            let mut out = Tensor::zeros(a.rows(), b.cols());
            gemm(&a, false, &b, false, &mut out, 0.0);
            (out, self.requires_grad() || other.requires_grad())
        };
        Ok(self.tape.push(out, Op::MatMul(self.id, other.id), rg))
    }

    fn reduce(&self, kind: Reduction, axis: Option<Axis>) -> Result<Var<'t>> {
        let (out, rg) = {
            let x = self.value();
            check_nan("reduce", &x)?;
            let [r, c] = x.shape();
            let out = match axis {
                None => {
                    let s: f64 = x.data().iter().sum();
                    let n = (r * c).max(1) as f64;
                    Tensor::scalar(if kind == Reduction::Mean { s / n } else { s })
                }
                Some(Axis::Rows) => {
                    let mut acc = vec![0.0; c];
                    for i in 0..r {
                        for (a, v) in acc.iter_mut().zip(x.row_slice(i)) {
                            *a += v;
                        }
                    }
                    if kind == Reduction::Mean && r > 0 {
                        acc.iter_mut().for_each(|a| *a /= r as f64);
                    }
                    Tensor::new(1, c, acc)?
                }
                Some(Axis::Cols) => {
                    let acc: Vec<f64> = (0..r)
                        .map(|i| {
                            let s: f64 = x.row_slice(i).iter().sum();
                            if kind == Reduction::Mean && c > 0 {
                                s / c as f64
                            } else {
                                s
                            }
                        })
                        .collect();
                    Tensor::new(r, 1, acc)?
                }
            };
            (out, self.requires_grad())
        };
        Ok(self.tape.push(
            out,
            Op::Reduce {
                kind,
                axis,
                input: self.id,
            },
            rg,
        ))
    }

    pub fn sum(&self, axis: Axis) -> Result<Var<'t>> {
        self.reduce(Reduction::Sum, Some(axis))
    }

    pub fn mean(&self, axis: Axis) -> Result<Var<'t>> {
        self.reduce(Reduction::Mean, Some(axis))
    }

    pub fn sum_all(&self) -> Result<Var<'t>> {
        self.reduce(Reduction::Sum, None)
    }

    pub fn mean_all(&self) -> Result<Var<'t>> {
        self.reduce(Reduction::Mean, None)
    }

    pub fn max(&self, axis: Axis) -> Result<Var<'t>> {
        let (out, argmax, rg) = {
            let x = self.value();
            check_nan("max", &x)?;
            let [r, c] = x.shape();
            if r == 0 || c == 0 {
                return Err(Error::shape("max", &[r, c], &[1, 1]));
            }
            let (vals, argmax): (Vec<f64>, Vec<usize>) = match axis {
                Axis::Rows => (0..c)
                    .map(|j| {
                        let mut best = (x.get(0, j), 0);
                        for i in 1..r {
                            if x.get(i, j) > best.0 {
                                best = (x.get(i, j), i);
                            }
                        }
                        best
                    })
                    .unzip(),
                Axis::Cols => (0..r)
                    .map(|i| {
                        let row = x.row_slice(i);
                        let mut best = (row[0], 0);
                        for (j, &v) in row.iter().enumerate().skip(1) {
                            if v > best.0 {
                                best = (v, j);
                            }
                        }
                        best
                    })
                    .unzip(),
            };
            let out = match axis {
                Axis::Rows => Tensor::new(1, c, vals)?,
                Axis::Cols => Tensor::new(r, 1, vals)?,
            };
            (out, argmax, self.requires_grad())
        };
        Ok(self.tape.push(
            out,
            Op::Max {
                axis,
                input: self.id,
                argmax,
            },
            rg,
        ))
    }

    pub fn softmax(&self, axis: Axis) -> Result<Var<'t>> {
        let (out, rg) = {
            let x = self.value();
            check_nan("softmax", &x)?;
            let out = match axis {
                Axis::Cols => softmax_rows(&x),
                Axis::Rows => softmax_rows(&x.transpose()).transpose(),
            };
            (out, self.requires_grad())
        };
        Ok(self.tape.push(
            out,
            Op::Softmax {
                axis,
                input: self.id,
            },
            rg,
        ))
    }

    /// Normalises every row to zero mean and unit variance (no affine part).
    pub fn layer_norm(&self, eps: f64) -> Result<Var<'t>> {
        let (out, inv_std, rg) = {
            let x = self.value();
            check_nan("layer_norm", &x)?;
            let [r, c] = x.shape();
            let mut out = Tensor::zeros(r, c);
            let mut inv_std = Vec::with_capacity(r);
            for i in 0..r {
                let row = x.row_slice(i);
                let mean = row.iter().sum::<f64>() / c as f64;
                let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
                let is = 1.0 / (var + eps).sqrt();
                for (o, v) in out.row_slice_mut(i).iter_mut().zip(row) {
                    *o = (v - mean) * is;
                }
                inv_std.push(is);
            }
            (out, inv_std, self.requires_grad())
        };
        Ok(self.tape.push(
            out,
            Op::LayerNorm {
                input: self.id,
                inv_std,
            },
            rg,
        ))
    }

    pub fn transpose(&self) -> Result<Var<'t>> {
        let (out, rg) = (self.value().transpose(), self.requires_grad());
        Ok(self.tape.push(out, Op::Transpose(self.id), rg))
    }

    /// Gathers rows `index[i]` into row `i` of the output.
    pub fn index_select(&self, index: &[usize]) -> Result<Var<'t>> {
        let (out, rg) = {
            let x = self.value();
            check_nan("index_select", &x)?;
            if let Some(&bad) = index.iter().find(|&&i| i >= x.rows()) {
                return Err(Error::shape("index_select", &x.shape(), &[bad]));
            }
            (x.select_rows(index), self.requires_grad())
        };
        Ok(self.tape.push(
            out,
            Op::IndexSelect {
                input: self.id,
                index: index.to_vec(),
            },
            rg,
        ))
    }

    /// Adds row `i` of `self` into row `index[i]` of a zero `out_rows x cols` matrix.
    pub fn scatter_add(&self, index: &[usize], out_rows: usize) -> Result<Var<'t>> {
        let (out, rg) = {
            let x = self.value();
            check_nan("scatter_add", &x)?;
            if index.len() != x.rows() {
                return Err(Error::shape("scatter_add", &x.shape(), &[index.len()]));
            }
            let mut out = Tensor::zeros(out_rows, x.cols());
            for (i, &dst) in index.iter().enumerate() {
                if dst >= out_rows {
                    return Err(Error::shape("scatter_add", &[out_rows], &[dst]));
                }
                for (o, v) in out.row_slice_mut(dst).iter_mut().zip(x.row_slice(i)) {
                    *o += v;
                }
            }
            (out, self.requires_grad())
        };
        Ok(self.tape.push(
            out,
            Op::ScatterAdd {
                input: self.id,
                index: index.to_vec(),
            },
            rg,
        ))
    }
}

fn apply(kind: BinaryKind, x: f64, y: f64) -> f64 {
    match kind {
        BinaryKind::Add => x + y,
        BinaryKind::Sub => x - y,
        BinaryKind::Mul => x * y,
        BinaryKind::Div => x / y,
    }
}

fn softmax_rows(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    for i in 0..x.rows() {
        let row = out.row_slice_mut(i);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    out
}

impl Tape {
    /// Concatenates along `axis` (`Axis::Rows` stacks vertically).
    pub fn concat<'t>(&'t self, parts: &[Var<'t>], axis: Axis) -> Result<Var<'t>> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("concat of zero tensors".into()));
        }
        for p in parts {
            same_tape("concat", &parts[0], p)?;
        }
        let out = {
            let vals: Vec<_> = parts.iter().map(|p| p.value()).collect();
            for v in &vals {
                check_nan("concat", v)?;
            }
            let first = vals[0].shape();
            match axis {
                Axis::Rows => {
                    let mut data = Vec::new();
                    let mut rows = 0;
                    for v in &vals {
                        if v.cols() != first[1] {
                            return Err(Error::shape("concat", &first, &v.shape()));
                        }
                        rows += v.rows();
                        data.extend_from_slice(v.data());
                    }
                    Tensor::new(rows, first[1], data)?
                }
                Axis::Cols => {
                    let cols: usize = vals.iter().map(|v| v.cols()).sum();
                    for v in &vals {
                        if v.rows() != first[0] {
                            return Err(Error::shape("concat", &first, &v.shape()));
                        }
                    }
                    let mut data = Vec::with_capacity(first[0] * cols);
                    for i in 0..first[0] {
                        for v in &vals {
                            data.extend_from_slice(v.row_slice(i));
                        }
                    }
                    Tensor::new(first[0], cols, data)?
                }
            }
        };
        let rg = parts.iter().any(|p| p.requires_grad());
        Ok(self.push(
            out,
            Op::Concat {
                axis,
                parts: parts.iter().map(|p| p.id).collect(),
            },
            rg,
        ))
    }
}
