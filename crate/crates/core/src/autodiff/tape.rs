use std::cell::{Cell, Ref, RefCell};
use std::fmt;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Reduction axis for `sum`, `mean` and `max`.
///
/// `Axis::Rows` collapses axis 0 (result `1 x n`), `Axis::Cols` collapses
/// axis 1 (result `m x 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

impl Axis {
    pub fn from_index(axis: usize) -> Result<Self> {
        match axis {
            0 => Ok(Axis::Rows),
            1 => Ok(Axis::Cols),
            _ => Err(Error::InvalidArgument(format!("axis {axis} out of range for rank 2"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum UnaryKind {
    Relu,
    Gelu,
    Exp,
    Log,
    Sqrt,
    Cosh,
    Sinh,
    Tanh,
    Acosh,
    Square,
    Abs,
    ClampMin(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum BinaryKind {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Reduction {
    Sum,
    Mean,
}

/// Recorded operation with the parent ids and whatever the backward rule needs.
#[derive(Debug)]
pub(crate) enum Op {
    Leaf,
    MatMul(usize, usize),
    Binary(BinaryKind, usize, usize),
    Affine { input: usize, scale: f64 },
    Unary(UnaryKind, usize),
    Reduce {
        kind: Reduction,
        axis: Option<Axis>,
        input: usize,
    },
    Max {
        axis: Axis,
        input: usize,
        argmax: Vec<usize>,
    },
    Softmax { axis: Axis, input: usize },
    LayerNorm { input: usize, inv_std: Vec<f64> },
    Transpose(usize),
    Concat { axis: Axis, parts: Vec<usize> },
    IndexSelect { input: usize, index: Vec<usize> },
    ScatterAdd { input: usize, index: Vec<usize> },
    SmoothL1 { pred: usize, target: usize, beta: f64 },
}

pub(crate) struct Node {
    pub(crate) value: Tensor,
    pub(crate) op: Op,
    pub(crate) requires_grad: bool,
}

/// Records a forward computation so it can be differentiated once.
///
/// A tape is single-threaded and single-use: build the forward pass, call
/// [`Tape::backward`] on a scalar, then read gradients with [`Tape::grad`].
#[derive(Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    grads: RefCell<Vec<Option<Tensor>>>,
    consumed: Cell<bool>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    pub(crate) tape: &'t Tape,
    pub(crate) id: usize,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let shape = self.shape();
        write!(f, "Var#{}{:?}", self.id, shape)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an input value. Gradients are collected for it when
    /// `requires_grad` is set.
    pub fn leaf(&self, value: Tensor, requires_grad: bool) -> Var<'_> {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.leaf(value, true)
    }

    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.leaf(value, false)
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn push(&self, value: Tensor, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        // Constant subgraphs do not need their backward bookkeeping.
        let op = if requires_grad { op } else { Op::Leaf };
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var { tape: self, id }
    }

    /// Gradient of the last backward pass with respect to `var`.
    ///
    /// Returns `None` for values that do not require gradients or were not
    /// reached from the loss.
    pub fn grad(&self, var: Var<'_>) -> Option<Tensor> {
        self.grads.borrow().get(var.id).cloned().flatten()
    }

    /// Runs reverse-mode differentiation from a scalar `loss`.
    pub fn backward(&self, loss: Var<'_>) -> Result<()> {
        if !std::ptr::eq(loss.tape, self) {
            return Err(Error::InvalidArgument("loss belongs to a different tape".into()));
        }
        if self.consumed.replace(true) {
            return Err(Error::InvalidArgument(
                "backward already ran on this tape".into(),
            ));
        }
        let nodes = self.nodes.borrow();
        let root = &nodes[loss.id];
        if root.value.shape() != [1, 1] {
            return Err(Error::shape("backward", &root.value.shape(), &[1, 1]));
        }
        let mut grads: Vec<Option<Tensor>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.id] = Some(Tensor::scalar(1.0));
        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if node.requires_grad {
                super::backward::propagate(&nodes, node, &g, &mut grads);
            }
            grads[id] = Some(g);
        }
        for (g, node) in grads.iter_mut().zip(nodes.iter()) {
            if !node.requires_grad {
                *g = None;
            }
        }
        *self.grads.borrow_mut() = grads;
        Ok(())
    }
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Ref<'t, Tensor> {
        Ref::map(self.tape.nodes.borrow(), |n| &n[self.id].value)
    }

    pub fn to_tensor(&self) -> Tensor {
        self.value().clone()
    }

    pub fn shape(&self) -> [usize; 2] {
        self.value().shape()
    }

    pub fn item(&self) -> f64 {
        self.value().item()
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.id].requires_grad
    }

    /// Identity in the forward pass; blocks all gradient flow backwards.
    pub fn stop_gradient(&self) -> Var<'t> {
        let v = self.to_tensor();
        self.tape.push(v, Op::Leaf, false)
    }

    pub fn grad(&self) -> Option<Tensor> {
        self.tape.grad(*self)
    }
}
