//! Small dense-network stack with hand-written reverse-mode gradients.
//!
//! Everything is batched: a batch is an `Array2` with one sample per row.
//! Gradients are stored in a value of the same type as the model (see
//! [`Params::zeros_like`]), so optimizers, Polyak averaging, checkpoints and
//! gradient checks all work through the flat tensor list of [`Params`].

mod attention;
pub mod checkpoint;
mod critic;
mod gradcheck;
mod optim;

use ndarray::{Array2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

pub use attention::{attention_contribution, attend, AttentionBlock, Attention};
pub use critic::{CriticSet, CriticTape};
pub use gradcheck::{grad_check, GradCheckReport};
pub use optim::{clip_grad_norm, Adam};

pub const LEAKY_SLOPE: f64 = 0.01;

/// A model whose parameters form an ordered list of matrices.
pub trait Params: Clone {
    fn tensors(&self) -> Vec<&Array2<f64>>;
    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn fill(&mut self, value: f64) {
        for t in self.tensors_mut() {
            t.fill(value);
        }
    }

    /// Same shapes, all zeros. Used as a gradient accumulator.
    fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.fill(0.0);
        z
    }

    fn same_shape(&self, other: &Self) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.dim() == y.dim())
    }

    fn copy_from(&mut self, other: &Self) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            dst.assign(src);
        }
    }

    /// `self <- xi * live + (1 - xi) * self`
    fn soft_update(&mut self, live: &Self, xi: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(live.tensors()) {
            dst.zip_mut_with(src, |t, &l| *t = xi * l + (1.0 - xi) * *t);
        }
    }

    fn add_assign(&mut self, other: &Self) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            *dst += src;
        }
    }

    fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            t.mapv_inplace(|v| v * k);
        }
    }

    fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .map(|t| t.iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// Flat copy of all parameters in tensor order.
    fn to_flat(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.iter().copied()).collect()
    }
}

impl<T: Params> Params for Vec<T> {
    fn tensors(&self) -> Vec<&Array2<f64>> {
        self.iter().flat_map(|p| p.tensors()).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.iter_mut().flat_map(|p| p.tensors_mut()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    LeakyRelu,
    Linear,
    /// Row-wise softmax. Only valid on the final layer.
    Softmax,
}

pub fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

pub fn leaky_relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Numerically stable softmax of one row.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let total = row.sum();
        row.mapv_inplace(|v| v / total);
    }
    out
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::LeakyRelu => z.mapv(leaky_relu),
            Activation::Linear => z.clone(),
            Activation::Softmax => softmax_rows(z),
        }
    }

    /// Gradient w.r.t. the pre-activation given the activation output `y`
    /// and the upstream gradient `dy`.
    fn backward(self, z: &Array2<f64>, y: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::LeakyRelu => {
                let mut dz = dy.clone();
                dz.zip_mut_with(z, |d, &zz| *d *= leaky_relu_grad(zz));
                dz
            }
            Activation::Linear => dy.clone(),
            Activation::Softmax => {
                // dz_k = y_k (dy_k - sum_j y_j dy_j)
                let dot = (y * dy).sum_axis(Axis(1)).insert_axis(Axis(1));
                y * &(dy - &dot)
            }
        }
    }
}

/// Uniform Glorot initialization in ±sqrt(6 / (fan_in + fan_out)).
pub fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..=limit))
}

/// Fully connected layer `y = x Wᵀ + b` with `W: out × in` and `b: 1 × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array2<f64>,
}

impl Dense {
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, rng: &mut R) -> Self {
        Self {
            w: glorot(output, input, rng),
            b: Array2::zeros((1, output)),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w.t()) + &self.b
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>, grad: &mut Dense) -> Array2<f64> {
        grad.w += &dy.t().dot(x);
        grad.b += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        dy.dot(&self.w)
    }

    /// Parameter gradients only.
    pub fn backward_params(&self, x: &Array2<f64>, dy: &Array2<f64>, grad: &mut Dense) {
        grad.w += &dy.t().dot(x);
        grad.b += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
    }
}

impl Params for Dense {
    fn tensors(&self) -> Vec<&Array2<f64>> {
        vec![&self.w, &self.b]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        vec![&mut self.w, &mut self.b]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub dense: Dense,
    pub activation: Activation,
}

/// Feed-forward network of dense layers.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Values recorded by [`DenseNet::forward_tape`] for the backward pass.
#[derive(Debug, Clone)]
pub struct NetTape {
    /// Input of each layer.
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pre: Vec<Array2<f64>>,
    /// Output of the final layer.
    output: Array2<f64>,
}

impl NetTape {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

impl DenseNet {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        for w in layers.windows(2) {
            if w[0].dense.output_dim() != w[1].dense.input_dim() {
                return Err(Error::Shape(format!(
                    "layer output {} does not feed input {}",
                    w[0].dense.output_dim(),
                    w[1].dense.input_dim()
                )));
            }
        }
        if layers[..layers.len() - 1]
            .iter()
            .any(|l| l.activation == Activation::Softmax)
        {
            return Err(Error::Shape("softmax is only allowed on the final layer".into()));
        }
        Ok(Self { layers })
    }

    /// `sizes = [in, h1, ..., out]`, Leaky ReLU on hidden layers.
    pub fn mlp<R: Rng + ?Sized>(sizes: &[usize], output: Activation, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "need input and output sizes");
        let last = sizes.len() - 2;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(k, w)| Layer {
                dense: Dense::new(w[0], w[1], rng),
                activation: if k == last { output } else { Activation::LeakyRelu },
            })
            .collect();
        Self::from_layers(layers).expect("mlp sizes chain by construction")
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].dense.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].dense.output_dim()
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut h = x.clone();
        for layer in &self.layers {
            h = layer.activation.apply(&layer.dense.forward(&h));
        }
        Ok(h)
    }

    pub fn forward_tape(&self, x: &Array2<f64>) -> Result<NetTape> {
        self.check_input(x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            let z = layer.dense.forward(&h);
            let y = layer.activation.apply(&z);
            inputs.push(h);
            pre.push(z);
            h = y;
        }
        Ok(NetTape {
            inputs,
            pre,
            output: h,
        })
    }

    /// Accumulates gradients of `sum(d_output ⊙ output)` into `grad` and
    /// returns the gradient w.r.t. the network input.
    pub fn backward(&self, tape: &NetTape, d_output: &Array2<f64>, grad: &mut DenseNet) -> Result<Array2<f64>> {
        if tape.inputs.len() != self.layers.len() {
            return Err(Error::Shape("tape was recorded by a different network".into()));
        }
        if d_output.dim() != tape.output.dim() {
            return Err(Error::Shape(format!(
                "upstream gradient {:?} does not match output {:?}",
                d_output.dim(),
                tape.output.dim()
            )));
        }
        let mut dy = d_output.clone();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let y_k = if k + 1 < self.layers.len() {
                &tape.inputs[k + 1]
            } else {
                &tape.output
            };
            let dz = layer.activation.backward(&tape.pre[k], y_k, &dy);
            dy = layer.dense.backward(&tape.inputs[k], &dz, &mut grad.layers[k].dense);
        }
        Ok(dy)
    }
}

impl Params for DenseNet {
    fn tensors(&self) -> Vec<&Array2<f64>> {
        self.layers.iter().flat_map(|l| l.dense.tensors()).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Array2<f64>> {
        self.layers.iter_mut().flat_map(|l| l.dense.tensors_mut()).collect()
    }
}

/// `B × width` one-hot rows.
pub fn one_hot(indices: &[usize], width: usize) -> Array2<f64> {
    let mut out = Array2::zeros((indices.len(), width));
    for (r, &k) in indices.iter().enumerate() {
        out[[r, k]] = 1.0;
    }
    out
}
