use serde::{Deserialize, Serialize};

use super::{Gradients, Mlp};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Bias-corrected ADAM with per-parameter moments.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    config: AdamConfig,
    step: u64,
    m: Gradients<T>,
    v: Gradients<T>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig, net: &Mlp<T>) -> Self {
        Self { config, step: 0, m: Gradients::zeros_like(net), v: Gradients::zeros_like(net) }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, net: &mut Mlp<T>, grads: &Gradients<T>) {
        self.step += 1;
        let (b1, b2) = (T::of(self.config.beta1), T::of(self.config.beta2));
        let c1 = T::one() - T::of(self.config.beta1.powi(self.step as i32));
        let c2 = T::one() - T::of(self.config.beta2.powi(self.step as i32));
        let lr = T::of(self.config.lr);
        let eps = T::of(self.config.epsilon);
        let step = Moments { b1, b2, c1, c2, lr, eps };
        for (((layer, g), m), v) in net.layers.iter_mut().zip(&grads.layers).zip(&mut self.m.layers).zip(&mut self.v.layers) {
            step.apply(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights);
            step.apply(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias);
        }
    }
}

#[inline]
fn flush<T: Scalar>(x: T, tiny: T) -> T {
    if x.abs() < tiny {
        T::zero()
    } else {
        x
    }
}

struct Moments<T> {
    b1: T,
    b2: T,
    c1: T,
    c2: T,
    lr: T,
    eps: T,
}

impl<T: Scalar> Moments<T> {
    // Plain equal-length slices so the loop vectorizes.
    #[inline]
    fn apply(&self, params: &mut [T], grad: &[T], m: &mut [T], v: &mut [T]) {
        let n = params.len();
        let (grad, m, v) = (&grad[..n], &mut m[..n], &mut v[..n]);
        let (one_b1, one_b2) = (T::one() - self.b1, T::one() - self.b2);
        let tiny = T::min_positive_value();
        for i in 0..n {
            let g = grad[i];
            // Moments of parameters that stop receiving gradient (dead ReLU
            // units) decay geometrically into subnormals, which are orders of
            // magnitude slower on most CPUs; flush them to zero instead.
            m[i] = flush(self.b1 * m[i] + one_b1 * g, tiny);
            v[i] = flush(self.b2 * v[i] + one_b2 * g * g, tiny);
            let m_hat = m[i] / self.c1;
            let v_hat = v[i] / self.c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}
