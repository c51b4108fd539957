//! Fully connected network with a manual forward/backward pass.
//!
//! Hidden layers apply the configured activation; the output layer is
//! linear. Gradients of a scalar objective flow back through
//! [`Mlp::backward`] given the objective's derivative with respect to the
//! network output. Parameters flatten to a single vector in a fixed order
//! (layer 0 weights row-major, layer 0 bias, layer 1 weights, ...) so the
//! optimizer can treat every network the same way.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Hidden-layer nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Swish,
}

impl Activation {
    #[inline]
    fn apply<F: Real>(self, x: F) -> F {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Swish => x * sigmoid(x),
        }
    }

    #[inline]
    fn derivative<F: Real>(self, x: F) -> F {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                F::one() - t * t
            }
            Activation::Swish => {
                let s = sigmoid(x);
                s * (F::one() + x * (F::one() - s))
            }
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Swish => "swish",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "swish" => Ok(Activation::Swish),
            other => Err(Error::invalid(format!(
                "unknown activation {other:?}; expected tanh or swish"
            ))),
        }
    }
}

#[inline]
fn sigmoid<F: Real>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// One dense layer, weights row-major `[rows x cols]` (output x input).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer<F> {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<F>,
    pub bias: Vec<F>,
}

impl<F: Real> Layer<F> {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, weights: vec![F::zero(); rows * cols], bias: vec![F::zero(); rows] }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn forward_into(&self, input: &[F], out: &mut Vec<F>) {
        out.clear();
        for r in 0..self.rows {
            let row = &self.weights[r * self.cols..(r + 1) * self.cols];
            let mut acc = self.bias[r];
            for (w, x) in row.iter().zip(input.iter()) {
                acc += *w * *x;
            }
            out.push(acc);
        }
    }
}

/// Multilayer perceptron parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp<F> {
    layers: Vec<Layer<F>>,
    activation: Activation,
    sizes: Vec<usize>,
}

/// Per-layer values cached by [`Mlp::forward_cached`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<F> {
    /// Input followed by each hidden layer's post-activation output.
    inputs: Vec<Vec<F>>,
    /// Pre-activation values for each hidden layer.
    pre_activations: Vec<Vec<F>>,
    output: Vec<F>,
}

impl<F: Real> ForwardCache<F> {
    pub fn output(&self) -> &[F] {
        &self.output
    }
}

impl<F: Real> Mlp<F> {
    /// Builds a network with the given layer sizes (input first, output
    /// last), Xavier-initialized weights and zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activation: Activation, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes, activation)?;
        for layer in &mut net.layers {
            let std = F::of((2.0 / (layer.rows + layer.cols) as f64).sqrt());
            for w in &mut layer.weights {
                *w = F::standard_normal(rng) * std;
            }
        }
        Ok(net)
    }

    /// All-zero parameters with the given shape.
    pub fn zeros(sizes: &[usize], activation: Activation) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::invalid("an MLP needs at least an input and an output size"));
        }
        if sizes.contains(&0) {
            return Err(Error::invalid(format!("layer sizes must be positive, got {sizes:?}")));
        }
        let layers = sizes
            .windows(2)
            .map(|pair| Layer::zeros(pair[1], pair[0]))
            .collect();
        Ok(Self { layers, activation, sizes: sizes.to_vec() })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Layer<F>] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Plain forward pass.
    pub fn forward(&self, input: &[F]) -> Result<Vec<F>> {
        Ok(self.forward_cached(input)?.output)
    }

    /// Forward pass that keeps per-layer values for [`Mlp::backward`].
    pub fn forward_cached(&self, input: &[F]) -> Result<ForwardCache<F>> {
        if input.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "input has {} entries, network expects {}",
                input.len(),
                self.input_dim()
            )));
        }
        let n_layers = self.layers.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut pre_activations = Vec::with_capacity(n_layers.saturating_sub(1));
        let mut x = input.to_vec();
        let mut z = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward_into(&x, &mut z);
            inputs.push(std::mem::take(&mut x));
            if i + 1 == n_layers {
                x = std::mem::take(&mut z);
            } else {
                pre_activations.push(z.clone());
                x = z.iter().map(|&v| self.activation.apply(v)).collect();
                z.clear();
            }
        }
        Ok(ForwardCache { inputs, pre_activations, output: x })
    }

    /// Backward pass: given `dL/d(output)`, returns `dL/d(params)` flattened
    /// in canonical order.
    pub fn backward(&self, cache: &ForwardCache<F>, d_output: &[F]) -> Result<Vec<F>> {
        if d_output.len() != self.output_dim() {
            return Err(Error::invalid(format!(
                "output gradient has {} entries, network produces {}",
                d_output.len(),
                self.output_dim()
            )));
        }
        let n_layers = self.layers.len();
        let mut grads: Vec<Vec<F>> = self
            .layers
            .iter()
            .map(|l| vec![F::zero(); l.param_count()])
            .collect();
        let mut delta = d_output.to_vec();
        for idx in (0..n_layers).rev() {
            let layer = &self.layers[idx];
            let layer_input = &cache.inputs[idx];
            let grad = &mut grads[idx];
            for r in 0..layer.rows {
                let g = delta[r];
                let wrow = &mut grad[r * layer.cols..(r + 1) * layer.cols];
                for (slot, x) in wrow.iter_mut().zip(layer_input.iter()) {
                    *slot = g * *x;
                }
            }
            let bias_off = layer.rows * layer.cols;
            grad[bias_off..].copy_from_slice(&delta);
            if idx > 0 {
                let mut prev = vec![F::zero(); layer.cols];
                for r in 0..layer.rows {
                    let g = delta[r];
                    let wrow = &layer.weights[r * layer.cols..(r + 1) * layer.cols];
                    for (p, w) in prev.iter_mut().zip(wrow.iter()) {
                        *p += *w * g;
                    }
                }
                let pre = &cache.pre_activations[idx - 1];
                for (p, z) in prev.iter_mut().zip(pre.iter()) {
                    *p *= self.activation.derivative(*z);
                }
                delta = prev;
            }
        }
        Ok(grads.concat())
    }

    /// Parameters flattened in canonical order.
    pub fn flatten(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    /// Overwrites parameters from a canonical-order flat vector.
    pub fn set_from_flat(&mut self, flat: &[F]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "flat vector has {} entries, network has {} parameters",
                flat.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    /// Subtracts `step` (canonical order) from the parameters.
    pub fn apply_step(&mut self, step: &[F]) -> Result<()> {
        if step.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "step vector has {} entries, network has {} parameters",
                step.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for layer in &mut self.layers {
            for w in &mut layer.weights {
                *w -= step[off];
                off += 1;
            }
            for b in &mut layer.bias {
                *b -= step[off];
                off += 1;
            }
        }
        Ok(())
    }

    /// True when every parameter is finite.
    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().all(|w| w.is_finite()) && l.bias.iter().all(|b| b.is_finite()))
    }
}
