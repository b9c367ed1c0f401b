use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::rng::Pcg32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    SoftmaxLinear,
    /// One hidden rectifier layer.
    Mlp1 {
        hidden: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub num_classes: usize,
}

impl ModelSpec {
    pub fn softmax_linear(input_dim: usize, num_classes: usize) -> Self {
        ModelSpec {
            kind: ModelKind::SoftmaxLinear,
            input_dim,
            num_classes,
        }
    }

    pub fn mlp1(input_dim: usize, hidden: usize, num_classes: usize) -> Self {
        ModelSpec {
            kind: ModelKind::Mlp1 { hidden },
            input_dim,
            num_classes,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::Config("a classifier needs at least two classes".into()));
        }
        if self.input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if let ModelKind::Mlp1 { hidden: 0 } = self.kind {
            return Err(Error::Config("hidden width must be positive".into()));
        }
        Ok(())
    }

    /// Layer shapes as `(fan_in, fan_out)`.
    pub fn layers(&self) -> Vec<(usize, usize)> {
        match self.kind {
            ModelKind::SoftmaxLinear => vec![(self.input_dim, self.num_classes)],
            ModelKind::Mlp1 { hidden } => vec![(self.input_dim, hidden), (hidden, self.num_classes)],
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(|(i, o)| i * o + o).sum()
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ModelKind::SoftmaxLinear => "softmax_linear",
            ModelKind::Mlp1 { .. } => "mlp1",
        }
    }
}

/// Flat parameter vector; each layer stores its weights input-major, then its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub spec: ModelSpec,
    pub params: Vec<T>,
}

/// Reusable per-sample buffers.
#[derive(Debug, Clone, Default)]
pub struct Scratch<T> {
    hidden: Vec<T>,
    logits: Vec<T>,
    dlogits: Vec<T>,
    dhidden: Vec<T>,
}

/// `out += x * W + b`, skipping zero inputs (sprite rasters are mostly background).
#[inline]
fn affine<T: Scalar>(w: &[T], b: &[T], x: &[T], out: &mut [T]) {
    out.copy_from_slice(b);
    let n_out = out.len();
    for (j, &xj) in x.iter().enumerate() {
        if xj == T::zero() {
            continue;
        }
        let row = &w[j * n_out..(j + 1) * n_out];
        for (o, &wk) in out.iter_mut().zip(row) {
            *o += xj * wk;
        }
    }
}

/// Accumulates `dW += x^T dout`, `db += dout`.
#[inline]
fn affine_grad<T: Scalar>(x: &[T], dout: &[T], gw: &mut [T], gb: &mut [T]) {
    let n_out = dout.len();
    for (g, &d) in gb.iter_mut().zip(dout) {
        *g += d;
    }
    for (j, &xj) in x.iter().enumerate() {
        if xj == T::zero() {
            continue;
        }
        let row = &mut gw[j * n_out..(j + 1) * n_out];
        for (g, &d) in row.iter_mut().zip(dout) {
            *g += xj * d;
        }
    }
}

/// Numerically stable softmax in place; returns log-sum-exp of the input.
pub fn softmax_in_place<T: Scalar>(z: &mut [T]) -> T {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
    max + sum.ln()
}

impl<T: Scalar> Model<T> {
    /// Glorot-uniform weights, zero biases.
    pub fn init(spec: ModelSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = Pcg32::seed_from_u64(seed);
        let mut params = Vec::with_capacity(spec.param_count());
        for (fan_in, fan_out) in spec.layers() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| T::of(rng.uniform(-limit, limit))));
            params.extend(std::iter::repeat_n(T::zero(), fan_out));
        }
        Ok(Model { spec, params })
    }

    pub fn from_params(spec: ModelSpec, params: Vec<T>) -> Result<Self> {
        spec.validate()?;
        if params.len() != spec.param_count() {
            return Err(Error::Dimension {
                expected: spec.param_count(),
                got: params.len(),
            });
        }
        Ok(Model { spec, params })
    }

    fn split(params: &[T], fan_in: usize, fan_out: usize) -> (&[T], &[T], &[T]) {
        let (w, rest) = params.split_at(fan_in * fan_out);
        let (b, rest) = rest.split_at(fan_out);
        (w, b, rest)
    }

    /// Forward pass; the logits end up in `scratch.logits`.
    fn forward(&self, x: &[T], s: &mut Scratch<T>) {
        let c = self.spec.num_classes;
        s.logits.resize(c, T::zero());
        match self.spec.kind {
            ModelKind::SoftmaxLinear => {
                let (w, b, _) = Self::split(&self.params, self.spec.input_dim, c);
                affine(w, b, x, &mut s.logits);
            }
            ModelKind::Mlp1 { hidden } => {
                let (w1, b1, rest) = Self::split(&self.params, self.spec.input_dim, hidden);
                let (w2, b2, _) = Self::split(rest, hidden, c);
                s.hidden.resize(hidden, T::zero());
                affine(w1, b1, x, &mut s.hidden);
                for h in s.hidden.iter_mut() {
                    *h = h.max(T::zero());
                }
                affine(w2, b2, &s.hidden, &mut s.logits);
            }
        }
    }

    pub fn logits(&self, x: &[T]) -> Vec<T> {
        let mut s = Scratch::default();
        self.forward(x, &mut s);
        s.logits
    }

    pub fn probabilities(&self, x: &[T]) -> Vec<T> {
        let mut z = self.logits(x);
        softmax_in_place(&mut z);
        z
    }

    /// Index of the largest logit, earliest on ties.
    pub fn predict(&self, x: &[T], s: &mut Scratch<T>) -> usize {
        self.forward(x, s);
        let mut best = 0;
        for (i, &v) in s.logits.iter().enumerate() {
            if v > s.logits[best] {
                best = i;
            }
        }
        best
    }

    /// Adds the gradient of one sample's cross-entropy to `grad`, returns the loss.
    pub fn accumulate(&self, x: &[T], label: usize, grad: &mut [T], s: &mut Scratch<T>) -> T {
        debug_assert_eq!(x.len(), self.spec.input_dim);
        self.forward(x, s);
        let c = self.spec.num_classes;
        s.dlogits.clear();
        s.dlogits.extend_from_slice(&s.logits);
        let lse = softmax_in_place(&mut s.dlogits);
        let loss = lse - s.logits[label];
        s.dlogits[label] -= T::one();
        match self.spec.kind {
            ModelKind::SoftmaxLinear => {
                let (gw, gb) = grad.split_at_mut(self.spec.input_dim * c);
                affine_grad(x, &s.dlogits, gw, &mut gb[..c]);
            }
            ModelKind::Mlp1 { hidden } => {
                let n1 = self.spec.input_dim * hidden;
                let (_, _, rest) = Self::split(&self.params, self.spec.input_dim, hidden);
                let (w2, _, _) = Self::split(rest, hidden, c);
                let (g1, g2) = grad.split_at_mut(n1 + hidden);
                let (gw2, gb2) = g2.split_at_mut(hidden * c);
                affine_grad(&s.hidden, &s.dlogits, gw2, &mut gb2[..c]);
                s.dhidden.clear();
                for k in 0..hidden {
                    let d = if s.hidden[k] > T::zero() {
                        w2[k * c..(k + 1) * c]
                            .iter()
                            .zip(&s.dlogits)
                            .map(|(&w, &d)| w * d)
                            .sum()
                    } else {
                        T::zero()
                    };
                    s.dhidden.push(d);
                }
                let (gw1, gb1) = g1.split_at_mut(n1);
                affine_grad(x, &s.dhidden, gw1, gb1);
            }
        }
        loss
    }

    /// Mean cross-entropy and its gradient over a batch.
    pub fn loss_and_grad(&self, inputs: &[&[T]], labels: &[usize]) -> (T, Vec<T>) {
        let mut grad = vec![T::zero(); self.params.len()];
        let mut s = Scratch::default();
        let mut loss = T::zero();
        for (x, &y) in inputs.iter().zip(labels) {
            loss += self.accumulate(x, y, &mut grad, &mut s);
        }
        let n = T::of(inputs.len().max(1) as f64);
        for g in grad.iter_mut() {
            *g /= n;
        }
        (loss / n, grad)
    }

    pub fn loss(&self, inputs: &[&[T]], labels: &[usize]) -> T {
        self.loss_and_grad(inputs, labels).0
    }
}
