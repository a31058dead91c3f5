//! Small score models with exact hand-written gradients.
//!
//! Two architectures cover every actor and critic in the crate: an affine
//! map `Wx + b` and a two-layer perceptron `W₂ tanh(W₁x + b₁) + b₂`, each
//! followed by an output activation. Parameters live in one flat vector:
//!
//! ```text
//! linear: W[out][in], b[out]
//! mlp2:   W₁[hidden][in], b₁[hidden], W₂[out][hidden], b₂[out]
//! ```

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    /// `v ↦ −|v|`, keeps every output `≤ 0`.
    NegativeAbsolute,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Identity => v,
            Activation::NegativeAbsolute => -v.abs(),
        }
    }

    /// Derivative; `−|v|` uses the subgradient `−sign(v)` with `sign(0) = +1`.
    #[inline]
    fn derivative(self, v: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::NegativeAbsolute => {
                if v >= 0.0 {
                    -1.0
                } else {
                    1.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    /// Hidden layer uses `tanh`.
    Mlp2 {
        hidden: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub input_dim: usize,
    pub output_dim: usize,
    pub output_activation: Activation,
}

impl ModelSpec {
    pub fn linear(input_dim: usize, output_dim: usize) -> Self {
        Self {
            kind: ModelKind::Linear,
            input_dim,
            output_dim,
            output_activation: Activation::Identity,
        }
    }

    pub fn mlp2(input_dim: usize, hidden: usize, output_dim: usize) -> Self {
        Self {
            kind: ModelKind::Mlp2 { hidden },
            input_dim,
            output_dim,
            output_activation: Activation::Identity,
        }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.output_activation = activation;
        self
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            ModelKind::Linear => (self.input_dim + 1) * self.output_dim,
            ModelKind::Mlp2 { hidden } => (self.input_dim + 1) * hidden + (hidden + 1) * self.output_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let hidden_ok = match self.kind {
            ModelKind::Linear => true,
            ModelKind::Mlp2 { hidden } => hidden >= 1,
        };
        if self.input_dim == 0 || self.output_dim == 0 || !hidden_ok {
            return Err(Error::InvalidModel(format!("dimensions must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// Model parameters plus Adam state.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    pub values: Vec<f64>,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
}

impl ParamSet {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        Self {
            values,
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
            step: 0,
        }
    }

    /// Weights and biases uniform in `±1/√fan_in` of their layer.
    pub fn init(spec: &ModelSpec, rng: &mut impl rand::Rng) -> Self {
        let mut values = Vec::with_capacity(spec.param_count());
        let mut layer = |fan_in: usize, fan_out: usize, values: &mut Vec<f64>| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..(fan_in + 1) * fan_out {
                values.push(rng.random_range(-bound..bound));
            }
        };
        match spec.kind {
            ModelKind::Linear => layer(spec.input_dim, spec.output_dim, &mut values),
            ModelKind::Mlp2 { hidden } => {
                layer(spec.input_dim, hidden, &mut values);
                layer(hidden, spec.output_dim, &mut values);
            }
        }
        Self::from_values(values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check(what: &'static str, expected: usize, got: usize) -> Result<()> {
    crate::colayer::check_dim(what, expected, got)
}

fn affine(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (o, y) in out.iter_mut().enumerate() {
        let row = &w[o * n_in..(o + 1) * n_in];
        *y = b[o] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
    }
}

/// Splits the flat parameter vector into `(W, b)` pairs per layer.
fn layers<'a>(spec: &ModelSpec, p: &'a [f64]) -> Vec<(&'a [f64], &'a [f64])> {
    let mut out = Vec::with_capacity(2);
    let mut rest = p;
    let mut take = |fan_in: usize, fan_out: usize| {
        let (w, r) = rest.split_at(fan_in * fan_out);
        let (b, r) = r.split_at(fan_out);
        rest = r;
        out.push((w, b));
    };
    match spec.kind {
        ModelKind::Linear => take(spec.input_dim, spec.output_dim),
        ModelKind::Mlp2 { hidden } => {
            take(spec.input_dim, hidden);
            take(hidden, spec.output_dim);
        }
    }
    out
}

fn check_shapes(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Result<()> {
    check("model parameters", spec.param_count(), params.len())?;
    check("model input", spec.input_dim, x.len())
}

/// Pre-activation output and (for `mlp2`) hidden activations.
fn forward_parts(spec: &ModelSpec, params: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let ls = layers(spec, params);
    let mut pre = vec![0.0; spec.output_dim];
    match spec.kind {
        ModelKind::Linear => {
            affine(ls[0].0, ls[0].1, x, &mut pre);
            (pre, Vec::new())
        }
        ModelKind::Mlp2 { hidden } => {
            let mut h = vec![0.0; hidden];
            affine(ls[0].0, ls[0].1, x, &mut h);
            h.iter_mut().for_each(|v| *v = v.tanh());
            affine(ls[1].0, ls[1].1, &h, &mut pre);
            (pre, h)
        }
    }
}

pub fn forward(spec: &ModelSpec, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_shapes(spec, params, x)?;
    let (mut y, _) = forward_parts(spec, params, x);
    y.iter_mut().for_each(|v| *v = spec.output_activation.apply(*v));
    Ok(y)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

/// Adds `∂(upstream·y)/∂params` into `param_grad`; returns the input
/// gradient.
pub fn backward_into(
    spec: &ModelSpec,
    params: &[f64],
    x: &[f64],
    upstream: &[f64],
    param_grad: &mut [f64],
) -> Result<Vec<f64>> {
    check_shapes(spec, params, x)?;
    check("upstream gradient", spec.output_dim, upstream.len())?;
    check("parameter gradient", params.len(), param_grad.len())?;
    let (pre, h) = forward_parts(spec, params, x);
    let dpre: Vec<f64> = upstream
        .iter()
        .zip(&pre)
        .map(|(u, v)| u * spec.output_activation.derivative(*v))
        .collect();
    let n_in = spec.input_dim;
    let mut dx = vec![0.0; n_in];
    match spec.kind {
        ModelKind::Linear => {
            let w = &params[..n_in * spec.output_dim];
            let (gw, gb) = param_grad.split_at_mut(n_in * spec.output_dim);
            for (o, &d) in dpre.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &w[o * n_in..(o + 1) * n_in];
                let grow = &mut gw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += d * x[i];
                    dx[i] += d * row[i];
                }
            }
        }
        ModelKind::Mlp2 { hidden } => {
            let n1 = n_in * hidden;
            let w1 = &params[..n1];
            let w2 = &params[n1 + hidden..n1 + hidden + hidden * spec.output_dim];
            let (g1, rest) = param_grad.split_at_mut(n1);
            let (gb1, rest) = rest.split_at_mut(hidden);
            let (g2, gb2) = rest.split_at_mut(hidden * spec.output_dim);
            let mut dh = vec![0.0; hidden];
            for (o, &d) in dpre.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb2[o] += d;
                for j in 0..hidden {
                    g2[o * hidden + j] += d * h[j];
                    dh[j] += d * w2[o * hidden + j];
                }
            }
            for j in 0..hidden {
                let dz = dh[j] * (1.0 - h[j] * h[j]);
                if dz == 0.0 {
                    continue;
                }
                gb1[j] += dz;
                let row = &w1[j * n_in..(j + 1) * n_in];
                let grow = &mut g1[j * n_in..(j + 1) * n_in];
                for i in 0..n_in {
                    grow[i] += dz * x[i];
                    dx[i] += dz * row[i];
                }
            }
        }
    }
    Ok(dx)
}

pub fn backward(spec: &ModelSpec, params: &[f64], x: &[f64], upstream: &[f64]) -> Result<Gradients> {
    let mut g = vec![0.0; params.len()];
    let input = backward_into(spec, params, x, upstream, &mut g)?;
    Ok(Gradients { params: g, input })
}

/// Row-major matrix of per-element input rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Features {
    cols: usize,
    data: Vec<f64>,
}

impl Features {
    pub fn new(cols: usize) -> Self {
        Self { cols, data: Vec::new() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn with_rows(cols: usize, rows: usize) -> Self {
        Self {
            cols,
            data: Vec::with_capacity(rows * cols),
        }
    }

    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// A model spec bound to its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    pub params: ParamSet,
}

impl Model {
    pub fn init(spec: ModelSpec, rng: &mut impl rand::Rng) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            params: ParamSet::init(&spec, rng),
        })
    }

    pub fn from_values(spec: ModelSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        check("model parameters", spec.param_count(), values.len())?;
        Ok(Self {
            spec,
            params: ParamSet::from_values(values),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        forward(&self.spec, &self.params.values, x)
    }

    /// Applies the model to every row; outputs are concatenated.
    pub fn forward_rows(&self, rows: &Features) -> Result<Vec<f64>> {
        check("model input", self.spec.input_dim, rows.cols())?;
        let mut out = Vec::with_capacity(rows.rows() * self.spec.output_dim);
        for x in rows.iter_rows() {
            let (pre, _) = forward_parts(&self.spec, &self.params.values, x);
            out.extend(pre.into_iter().map(|v| self.spec.output_activation.apply(v)));
        }
        Ok(out)
    }

    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<Gradients> {
        backward(&self.spec, &self.params.values, x, upstream)
    }

    /// Accumulates parameter gradients over rows, with `upstream` holding
    /// `output_dim` entries per row. Returns per-row input gradients.
    pub fn backward_rows(&self, rows: &Features, upstream: &[f64], param_grad: &mut [f64]) -> Result<Vec<f64>> {
        let k = self.spec.output_dim;
        check("upstream gradient", rows.rows() * k, upstream.len())?;
        let mut dx = Vec::with_capacity(rows.rows() * rows.cols());
        for (r, x) in rows.iter_rows().enumerate() {
            let up = &upstream[r * k..(r + 1) * k];
            if up.iter().all(|&u| u == 0.0) {
                dx.extend(std::iter::repeat_n(0.0, rows.cols()));
                continue;
            }
            dx.extend(backward_into(&self.spec, &self.params.values, x, up, param_grad)?);
        }
        Ok(dx)
    }

    pub fn zero_grad(&self) -> Vec<f64> {
        vec![0.0; self.params.len()]
    }
}

/// Adam with bias correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl Adam {
    pub fn step(&self, params: &mut ParamSet, grads: &[f64], lr: f64) -> Result<()> {
        check("gradient", params.len(), grads.len())?;
        params.step += 1;
        let t = params.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..grads.len() {
            let g = grads[i];
            let m = self.beta1 * params.first_moment[i] + (1.0 - self.beta1) * g;
            let v = self.beta2 * params.second_moment[i] + (1.0 - self.beta2) * g * g;
            params.first_moment[i] = m;
            params.second_moment[i] = v;
            params.values[i] -= lr * (m / c1) / ((v / c2).sqrt() + self.eps);
        }
        Ok(())
    }
}

pub fn adam_step(params: &mut ParamSet, grads: &[f64], lr: f64) -> Result<()> {
    Adam::default().step(params, grads, lr)
}

/// Linear interpolation from `start` at episode 0 to `end` at episode
/// `horizon − 1`, constant afterwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub start: f64,
    pub end: f64,
    pub horizon: usize,
}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Self {
            start: value,
            end: value,
            horizon: 1,
        }
    }

    pub fn linear(start: f64, end: f64, horizon: usize) -> Self {
        Self {
            start,
            end,
            horizon: horizon.max(1),
        }
    }

    pub fn at(&self, episode: usize) -> f64 {
        if self.horizon <= 1 || episode + 1 >= self.horizon {
            return self.end;
        }
        let frac = episode as f64 / (self.horizon - 1) as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Huber loss of `pred − target` and its derivative with respect to `pred`.
pub fn huber(pred: f64, target: f64, delta: f64) -> (f64, f64) {
    let e = pred - target;
    if e.abs() <= delta {
        (0.5 * e * e, e)
    } else {
        (delta * (e.abs() - 0.5 * delta), delta * e.signum())
    }
}
