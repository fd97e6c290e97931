use alloc::vec::Vec;

use super::matrix::Matrix;
use super::tape::{Gradients, ParamStore};

/// Adam with bias correction, decoupled weight decay and optional
/// global-norm gradient clipping.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub clip_norm: Option<f64>,
    pub weight_decay: f64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
    steps: i32,
}

impl Adam {
    pub fn new(store: &ParamStore, lr: f64) -> Self {
        let zeros = || store.iter().map(|(_, _, m)| Matrix::zeros(m.rows, m.cols)).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: Some(1.0),
            weight_decay: 0.0,
            first: zeros(),
            second: zeros(),
            steps: 0,
        }
    }

    pub fn with_weight_decay(mut self, weight_decay: f64) -> Self {
        self.weight_decay = weight_decay;
        self
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }

    /// Applies one update. Returns the gradient norm before clipping.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) -> f64 {
        let norm = grads.norm();
        let scale = match self.clip_norm {
            Some(c) if norm > c => c / norm,
            _ => 1.0,
        };
        self.steps += 1;
        let bc1 = 1.0 - libm::pow(self.beta1, self.steps as f64);
        let bc2 = 1.0 - libm::pow(self.beta2, self.steps as f64);
        let decay = 1.0 - self.lr * self.weight_decay;
        let ids: Vec<_> = store.ids().collect();
        for id in ids {
            let g = grads.get(id);
            let (m, v) = (&mut self.first[id.0], &mut self.second[id.0]);
            let p = store.get_mut(id);
            for i in 0..p.data.len() {
                let gi = g.data[i] * scale;
                m.data[i] = self.beta1 * m.data[i] + (1.0 - self.beta1) * gi;
                v.data[i] = self.beta2 * v.data[i] + (1.0 - self.beta2) * gi * gi;
                let mhat = m.data[i] / bc1;
                let vhat = v.data[i] / bc2;
                p.data[i] = decay * p.data[i] - self.lr * mhat / (libm::sqrt(vhat) + self.eps);
            }
        }
        norm
    }
}
