use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam { .. } => "adam",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    lr: T,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, learning_rate: f64, n_params: usize) -> Self {
        let state = matches!(kind, OptimizerKind::Adam { .. });
        Optimizer {
            kind,
            lr: T::of(learning_rate),
            m: if state { vec![T::zero(); n_params] } else { Vec::new() },
            v: if state { vec![T::zero(); n_params] } else { Vec::new() },
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [T], grad: &[T]) {
        self.t += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, &g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let (b1, b2, eps) = (T::of(beta1), T::of(beta2), T::of(eps));
                let one = T::one();
                let c1 = one - b1.powi(self.t);
                let c2 = one - b2.powi(self.t);
                let step = self.lr * c2.sqrt() / c1;
                let eps_hat = eps * c2.sqrt();
                for i in 0..params.len() {
                    let g = grad[i];
                    self.m[i] = b1 * self.m[i] + (one - b1) * g;
                    self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
                    params[i] -= step * self.m[i] / (self.v[i].sqrt() + eps_hat);
                }
            }
        }
    }
}
