use ndarray::Array2;

use super::Params;
use crate::error::{Error, Result};

/// Adaptive-moment optimizer. `step` descends; negate the gradient to ascend.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new<P: Params>(model: &P, lr: f64) -> Self {
        let zeros: Vec<Array2<f64>> = model.tensors().iter().map(|t| Array2::zeros(t.dim())).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Array2<f64>], &[Array2<f64>]) {
        (&self.m, &self.v)
    }

    /// Restores moments and step count, e.g. from a checkpoint.
    pub fn set_state(&mut self, step: u64, m: Vec<Array2<f64>>, v: Vec<Array2<f64>>) -> Result<()> {
        let ok = |xs: &[Array2<f64>]| xs.len() == self.m.len() && xs.iter().zip(&self.m).all(|(a, b)| a.dim() == b.dim());
        if !ok(&m) || !ok(&v) {
            return Err(Error::Shape("optimizer state does not match parameters".into()));
        }
        self.step = step;
        self.m = m;
        self.v = v;
        Ok(())
    }

    pub fn step<P: Params>(&mut self, model: &mut P, grad: &P) -> Result<()> {
        let grads = grad.tensors();
        let params = model.tensors_mut();
        if params.len() != self.m.len()
            || grads.len() != self.m.len()
            || params.iter().zip(&grads).zip(&self.m).any(|((p, g), m)| p.dim() != m.dim() || g.dim() != m.dim())
        {
            return Err(Error::Shape("optimizer, parameters and gradients disagree".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            ndarray::Zip::from(p).and(g).and(m).and(v).for_each(|p, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            });
        }
        Ok(())
    }
}

/// Rescales `grad` so its global L2 norm is at most `max_norm`. Returns the
/// norm before clipping. A non-positive or infinite `max_norm` disables it.
pub fn clip_grad_norm<P: Params>(grad: &mut P, max_norm: f64) -> f64 {
    let norm = grad.l2_norm();
    if max_norm > 0.0 && max_norm.is_finite() && norm > max_norm {
        grad.scale(max_norm / norm);
    }
    norm
}
