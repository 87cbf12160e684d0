//! Backward rules, one arm per recorded operation.

use super::ops::{bidx, gelu_grad};
use super::tape::{Axis, BinaryKind, Node, Op, Reduction, UnaryKind};
use super::tensor::{gemm, Tensor};

fn accumulate(grads: &mut [Option<Tensor>], nodes: &[Node], id: usize, g: Tensor) {
    if !nodes[id].requires_grad {
        return;
    }
    match &mut grads[id] {
        Some(acc) => {
            for (a, v) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += v;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

/// Sums a broadcast gradient back down to `shape`.
fn unbroadcast(g: &Tensor, shape: [usize; 2]) -> Tensor {
    if g.shape() == shape {
        return g.clone();
    }
    let mut out = Tensor::zeros(shape[0], shape[1]);
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            out.data_mut()[bidx(shape, i, j)] += g.get(i, j);
        }
    }
    out
}

pub(crate) fn propagate(nodes: &[Node], node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            let (av, bv) = (&nodes[*a].value, &nodes[*b].value);
            if nodes[*a].requires_grad {
                let mut ga = Tensor::zeros(av.rows(), av.cols());
                gemm(g, false, bv, true, &mut ga, 0.0);
                accumulate(grads, nodes, *a, ga);
            }
            if nodes[*b].requires_grad {
                let mut gb = Tensor::zeros(bv.rows(), bv.cols());
                gemm(av, true, g, false, &mut gb, 0.0);
                accumulate(grads, nodes, *b, gb);
            }
        }
        Op::Binary(kind, a, b) => {
            let (av, bv) = (&nodes[*a].value, &nodes[*b].value);
            let (sa, sb) = (av.shape(), bv.shape());
            let [r, c] = g.shape();
            let mut ga = Tensor::zeros(r, c);
            let mut gb = Tensor::zeros(r, c);
            for i in 0..r {
                for j in 0..c {
                    let gv = g.get(i, j);
                    let x = av.data()[bidx(sa, i, j)];
                    let y = bv.data()[bidx(sb, i, j)];
                    let (da, db) = match kind {
                        BinaryKind::Add => (gv, gv),
                        BinaryKind::Sub => (gv, -gv),
                        BinaryKind::Mul => (gv * y, gv * x),
                        BinaryKind::Div => (gv / y, -gv * x / (y * y)),
                    };
                    ga.set(i, j, da);
                    gb.set(i, j, db);
                }
            }
            if nodes[*a].requires_grad {
                accumulate(grads, nodes, *a, unbroadcast(&ga, sa));
            }
            if nodes[*b].requires_grad {
                accumulate(grads, nodes, *b, unbroadcast(&gb, sb));
            }
        }
        Op::Affine { input, scale } => {
            accumulate(grads, nodes, *input, g.map(|v| v * scale));
        }
        Op::Unary(kind, input) => {
            let x = &nodes[*input].value;
            let y = &node.value;
            let data: Vec<f64> = g
                .data()
                .iter()
                .zip(x.data())
                .zip(y.data())
                .map(|((&gv, &xv), &yv)| {
                    gv * match kind {
                        UnaryKind::Relu => {
                            if xv > 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                        UnaryKind::Gelu => gelu_grad(xv),
                        UnaryKind::Exp => yv,
                        UnaryKind::Log => 1.0 / xv,
                        UnaryKind::Sqrt => 0.5 / yv,
                        UnaryKind::Cosh => xv.sinh(),
                        UnaryKind::Sinh => xv.cosh(),
                        UnaryKind::Tanh => 1.0 - yv * yv,
                        UnaryKind::Acosh => 1.0 / (xv * xv - 1.0).sqrt(),
                        UnaryKind::Square => 2.0 * xv,
                        UnaryKind::Abs => xv.signum(),
                        UnaryKind::ClampMin(m) => {
                            if xv > *m {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    }
                })
                .collect();
            let t = Tensor::new(x.rows(), x.cols(), data).expect("unary grad shape");
            accumulate(grads, nodes, *input, t);
        }
        Op::Reduce { kind, axis, input } => {
            let [r, c] = nodes[*input].value.shape();
            let mut out = Tensor::zeros(r, c);
            let n = match axis {
                None => (r * c).max(1),
                Some(Axis::Rows) => r.max(1),
                Some(Axis::Cols) => c.max(1),
            };
            let div = if *kind == Reduction::Mean { n as f64 } else { 1.0 };
            for i in 0..r {
                for j in 0..c {
                    let gv = match axis {
                        None => g.item(),
                        Some(Axis::Rows) => g.get(0, j),
                        Some(Axis::Cols) => g.get(i, 0),
                    };
                    out.set(i, j, gv / div);
                }
            }
            accumulate(grads, nodes, *input, out);
        }
        Op::Max {
            axis,
            input,
            argmax,
        } => {
            let [r, c] = nodes[*input].value.shape();
            let mut out = Tensor::zeros(r, c);
            match axis {
                Axis::Rows => {
                    for (j, &i) in argmax.iter().enumerate() {
                        out.set(i, j, g.get(0, j));
                    }
                }
                Axis::Cols => {
                    for (i, &j) in argmax.iter().enumerate() {
                        out.set(i, j, g.get(i, 0));
                    }
                }
            }
            accumulate(grads, nodes, *input, out);
        }
        Op::Softmax { axis, input } => {
            let y = &node.value;
            let out = match axis {
                Axis::Cols => softmax_backward_rows(y, g),
                Axis::Rows => softmax_backward_rows(&y.transpose(), &g.transpose()).transpose(),
            };
            accumulate(grads, nodes, *input, out);
        }
        Op::LayerNorm { input, inv_std } => {
            let xhat = &node.value;
            let [r, c] = xhat.shape();
            let mut out = Tensor::zeros(r, c);
            for i in 0..r {
                let gr = g.row_slice(i);
                let xr = xhat.row_slice(i);
                let mean_g = gr.iter().sum::<f64>() / c as f64;
                let mean_gx = gr.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>() / c as f64;
                for (j, o) in out.row_slice_mut(i).iter_mut().enumerate() {
                    *o = inv_std[i] * (gr[j] - mean_g - xr[j] * mean_gx);
                }
            }
            accumulate(grads, nodes, *input, out);
        }
        Op::Transpose(input) => {
            accumulate(grads, nodes, *input, g.transpose());
        }
        Op::Concat { axis, parts } => {
            let mut offset = 0;
            for &p in parts {
                let [r, c] = nodes[p].value.shape();
                let part = match axis {
                    Axis::Rows => {
                        let idx: Vec<usize> = (offset..offset + r).collect();
                        offset += r;
                        g.select_rows(&idx)
                    }
                    Axis::Cols => {
                        let mut t = Tensor::zeros(r, c);
                        for i in 0..r {
                            t.row_slice_mut(i)
                                .copy_from_slice(&g.row_slice(i)[offset..offset + c]);
                        }
                        offset += c;
                        t
                    }
                };
                accumulate(grads, nodes, p, part);
            }
        }
        Op::IndexSelect { input, index } => {
            let [r, c] = nodes[*input].value.shape();
            let mut out = Tensor::zeros(r, c);
            for (i, &src) in index.iter().enumerate() {
                for (o, v) in out.row_slice_mut(src).iter_mut().zip(g.row_slice(i)) {
                    *o += v;
                }
            }
            accumulate(grads, nodes, *input, out);
        }
        Op::ScatterAdd { input, index } => {
            accumulate(grads, nodes, *input, g.select_rows(index));
        }
        Op::SmoothL1 { pred, target, beta } => {
            let (p, t) = (&nodes[*pred].value, &nodes[*target].value);
            let n = p.len().max(1) as f64;
            let scale = g.item() / n;
            let data: Vec<f64> = p
                .data()
                .iter()
                .zip(t.data())
                .map(|(&a, &b)| {
                    let d = a - b;
                    scale * if d.abs() < *beta { d / beta } else { d.signum() }
                })
                .collect();
            let gp = Tensor::new(p.rows(), p.cols(), data).expect("smooth_l1 grad shape");
            if nodes[*target].requires_grad {
                accumulate(grads, nodes, *target, gp.map(|v| -v));
            }
            accumulate(grads, nodes, *pred, gp);
        }
    }
}

fn softmax_backward_rows(y: &Tensor, g: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(y.rows(), y.cols());
    for i in 0..y.rows() {
        let yr = y.row_slice(i);
        let gr = g.row_slice(i);
        let dot: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
        for (j, o) in out.row_slice_mut(i).iter_mut().enumerate() {
            *o = yr[j] * (gr[j] - dot);
        }
    }
    out
}
