use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Bias-corrected Adam state for a list of parameter tensors.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl Adam {
    pub fn new(params: &[Tensor], lr: f64) -> Self {
        Self::with_betas(params, lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(params: &[Tensor], lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.rows(), p.cols())).collect();
        Self {
            lr,
            beta1,
            beta2,
            eps,
            step: 0,
            first: zeros(),
            second: zeros(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update. A `None` gradient is treated as zero.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Option<Tensor>]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(Error::shape("adam_step", &[self.first.len()], &[params.len(), grads.len()]));
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (i, (param, grad)) in params.iter_mut().zip(grads).enumerate() {
            if param.shape() != self.first[i].shape() {
                return Err(Error::shape("adam_step", &self.first[i].shape(), &param.shape()));
            }
            let shape = param.shape();
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            let p = param.data_mut();
            match grad {
                Some(g) => {
                    if g.shape() != shape {
                        return Err(Error::shape("adam_step", &g.shape(), &shape));
                    }
                    for (((pj, mj), vj), &gj) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()).zip(g.data()) {
                        *mj = self.beta1 * *mj + (1.0 - self.beta1) * gj;
                        *vj = self.beta2 * *vj + (1.0 - self.beta2) * gj * gj;
                        *pj -= self.lr * (*mj / bc1) / ((*vj / bc2).sqrt() + self.eps);
                    }
                }
                None => {
                    for ((pj, mj), vj) in p.iter_mut().zip(m.iter_mut()).zip(v.iter_mut()) {
                        *mj *= self.beta1;
                        *vj *= self.beta2;
                        *pj -= self.lr * (*mj / bc1) / ((*vj / bc2).sqrt() + self.eps);
                    }
                }
            }
        }
        Ok(())
    }
}
