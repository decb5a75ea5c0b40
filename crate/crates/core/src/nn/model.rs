use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{gemm, Matrix};
use super::NnError;

/// Frequency factor folded into the first-layer weights of sine networks.
pub const SINE_OMEGA0: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    Elu,
    Sine,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, u: f64) -> f64 {
        match self {
            Activation::Elu => {
                if u > 0.0 {
                    u
                } else {
                    libm::expm1(u)
                }
            }
            Activation::Sine => libm::sin(u),
            Activation::Linear => u,
        }
    }

    /// Derivative at pre-activation `u`, given `a = apply(u)`.
    #[inline]
    pub fn derivative(self, u: f64, a: f64) -> f64 {
        match self {
            Activation::Elu => {
                if u > 0.0 {
                    1.0
                } else {
                    a + 1.0
                }
            }
            Activation::Sine => libm::cos(u),
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Elu => "elu",
            Activation::Sine => "sine",
            Activation::Linear => "linear",
        }
    }
}

/// Dense layer `a = act(x W + b)` with `W` stored `[fan_in x fan_out]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn fan_in(&self) -> usize {
        self.weights.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MlpModel {
    layers: Vec<Layer>,
    l2_factor: f64,
}

/// Post-activation outputs of every hidden layer for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutputs {
    pub hidden: Vec<Matrix>,
}

/// Parameter gradients, laid out like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Self {
            weights: model.layers.iter().map(|l| Matrix::zeros(l.fan_in(), l.fan_out())).collect(),
            biases: model.layers.iter().map(|l| alloc::vec![0.0; l.fan_out()]).collect(),
        }
    }

    /// Gradient buffers in the same order as [`MlpModel::parameters_mut`].
    pub fn slices(&self) -> impl Iterator<Item = &[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.as_slice(), b.as_slice()])
    }

    pub fn is_finite(&self) -> bool {
        self.slices().all(|s| s.iter().all(|v| v.is_finite()))
    }
}

/// Validates `layer_sizes` and draws initial parameters.
///
/// Hidden layers use `activation`; the output layer is always linear.
/// Weights are uniform in `±sqrt(6 / (fan_in + fan_out))` for ELU and linear
/// layers. Sine layers use `±omega0 / fan_in` on the first layer and
/// `±sqrt(6 / fan_in)` after it, the usual sinusoidal-network scheme with
/// `omega0` folded into the weights. Biases start at zero.
pub fn init_model(
    layer_sizes: &[usize],
    activation: Activation,
    l2_factor: f64,
    seed: u64,
) -> Result<MlpModel, NnError> {
    if layer_sizes.len() < 2 {
        return Err(NnError::InvalidSizes("need at least input and output sizes"));
    }
    if layer_sizes.contains(&0) {
        return Err(NnError::InvalidSizes("layer sizes must be positive"));
    }
    if *layer_sizes.last().unwrap() != 1 {
        return Err(NnError::InvalidSizes("output layer must have exactly one neuron"));
    }
    if !(l2_factor.is_finite() && l2_factor >= 0.0) {
        return Err(NnError::InvalidConfig("l2_factor must be finite and nonnegative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_layers = layer_sizes.len() - 1;
    let layers = layer_sizes
        .windows(2)
        .enumerate()
        .map(|(k, pair)| {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let is_output = k + 1 == n_layers;
            let act = if is_output { Activation::Linear } else { activation };
            let limit = match act {
                Activation::Sine if k == 0 => SINE_OMEGA0 / fan_in as f64,
                Activation::Sine => libm::sqrt(6.0 / fan_in as f64),
                _ => libm::sqrt(6.0 / (fan_in + fan_out) as f64),
            };
            let weights = Matrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-limit..=limit));
            Layer { weights, bias: alloc::vec![0.0; fan_out], activation: act }
        })
        .collect();
    Ok(MlpModel { layers, l2_factor })
}

/// Per-layer buffers for one batch size.
#[derive(Debug, Clone)]
pub struct Workspace {
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
    delta: Vec<Matrix>,
}

impl Workspace {
    pub fn new(model: &MlpModel, batch: usize) -> Self {
        let mk = || model.layers.iter().map(|l| Matrix::zeros(batch, l.fan_out())).collect::<Vec<_>>();
        Self { pre: mk(), post: mk(), delta: mk() }
    }

    fn resize(&mut self, batch: usize) {
        for m in self.pre.iter_mut().chain(&mut self.post).chain(&mut self.delta) {
            m.resize_rows(batch);
        }
    }

    fn batch(&self) -> usize {
        self.pre.first().map_or(0, Matrix::rows)
    }

    pub(crate) fn predictions(&self) -> &[f64] {
        self.post.last().map_or(&[], |m| m.as_slice())
    }
}

impl MlpModel {
    /// Assembles a model from explicit layers, checking the chain invariants.
    pub fn from_layers(layers: Vec<Layer>, l2_factor: f64) -> Result<Self, NnError> {
        let Some(last) = layers.last() else {
            return Err(NnError::InvalidSizes("model needs at least one layer"));
        };
        if last.fan_out() != 1 || last.activation != Activation::Linear {
            return Err(NnError::InvalidSizes("output layer must be a single linear neuron"));
        }
        for pair in layers.windows(2) {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(NnError::InvalidSizes("consecutive layer dimensions do not chain"));
            }
        }
        if layers.iter().any(|l| l.bias.len() != l.fan_out() || l.fan_in() == 0) {
            return Err(NnError::InvalidSizes("bias length must equal fan_out"));
        }
        if !(l2_factor.is_finite() && l2_factor >= 0.0) {
            return Err(NnError::InvalidConfig("l2_factor must be finite and nonnegative"));
        }
        let model = Self { layers, l2_factor };
        if !model.is_finite() {
            return Err(NnError::NonFinite("parameters"));
        }
        Ok(model)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn l2_factor(&self) -> f64 {
        self.l2_factor
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].fan_in()
    }

    /// `[fan_in, hidden..., 1]`
    pub fn layer_sizes(&self) -> Vec<usize> {
        core::iter::once(self.input_width()).chain(self.layers.iter().map(Layer::fan_out)).collect()
    }

    pub fn hidden_activation(&self) -> Activation {
        let n = self.layers.len();
        if n > 1 {
            self.layers[0].activation
        } else {
            Activation::Linear
        }
    }

    pub fn n_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.as_slice().len() + l.bias.len()).sum()
    }

    /// Parameter buffers: `W_1, b_1, W_2, b_2, ...`.
    pub fn parameters_mut(&mut self) -> impl Iterator<Item = &mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.as_mut_slice(), l.bias.as_mut_slice()])
    }

    pub fn parameters(&self) -> impl Iterator<Item = &[f64]> {
        self.layers.iter().flat_map(|l| [l.weights.as_slice(), l.bias.as_slice()])
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().all(|s| s.iter().all(|v| v.is_finite()))
    }

    /// `Σ W²` over every layer except the output layer.
    pub fn hidden_weight_norm_sq(&self) -> f64 {
        let n = self.layers.len();
        self.layers[..n - 1].iter().map(|l| l.weights.sum_of_squares()).sum()
    }

    /// `l2_factor · Σ W²` over hidden-layer weight matrices.
    pub fn l2_penalty(&self) -> f64 {
        if self.l2_factor == 0.0 {
            0.0
        } else {
            self.l2_factor * self.hidden_weight_norm_sq()
        }
    }

    fn check_inputs(&self, inputs: &Matrix) -> Result<(), NnError> {
        if inputs.cols() != self.input_width() {
            return Err(NnError::ShapeMismatch { expected: self.input_width(), got: inputs.cols() });
        }
        Ok(())
    }

    /// Runs the network into `ws`, which must have been built for this model.
    pub(crate) fn forward_into(&self, inputs: &Matrix, ws: &mut Workspace) -> Result<(), NnError> {
        self.check_inputs(inputs)?;
        ws.resize(inputs.rows());
        for (k, layer) in self.layers.iter().enumerate() {
            let (done, rest) = ws.post.split_at_mut(k);
            let x = if k == 0 { inputs } else { &done[k - 1] };
            let pre = &mut ws.pre[k];
            for r in 0..pre.rows() {
                pre.row_mut(r).copy_from_slice(&layer.bias);
            }
            gemm(1.0, x, false, &layer.weights, false, 1.0, pre);
            let post = &mut rest[0];
            let act = layer.activation;
            for (a, &u) in post.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                *a = act.apply(u);
            }
        }
        Ok(())
    }

    /// Predictions `[B x 1]` for `inputs` `[B x fan_in]`.
    pub fn forward(&self, inputs: &Matrix) -> Result<Matrix, NnError> {
        let mut ws = Workspace::new(self, inputs.rows());
        self.forward_into(inputs, &mut ws)?;
        Ok(ws.post.pop().unwrap_or_else(|| Matrix::zeros(0, 1)))
    }

    /// Predictions plus the post-activation output of every hidden layer.
    pub fn forward_traced(&self, inputs: &Matrix) -> Result<(Matrix, LayerOutputs), NnError> {
        let mut ws = Workspace::new(self, inputs.rows());
        self.forward_into(inputs, &mut ws)?;
        let mut post = ws.post;
        let predictions = post.pop().unwrap_or_else(|| Matrix::zeros(0, 1));
        Ok((predictions, LayerOutputs { hidden: post }))
    }

    /// Predictions in chunks of `chunk` rows, bounding workspace memory.
    pub fn predict(&self, inputs: &Matrix, chunk: usize) -> Result<Vec<f64>, NnError> {
        self.check_inputs(inputs)?;
        let chunk = chunk.max(1);
        let mut out = Vec::with_capacity(inputs.rows());
        let mut ws = Workspace::new(self, chunk.min(inputs.rows()));
        let mut start = 0;
        while start < inputs.rows() {
            let end = (start + chunk).min(inputs.rows());
            let idx: Vec<usize> = (start..end).collect();
            let block = inputs.select_rows(&idx);
            self.forward_into(&block, &mut ws)?;
            out.extend_from_slice(ws.predictions());
            start = end;
        }
        Ok(out)
    }

    /// Backpropagates from the state left in `ws` by [`Self::forward_into`].
    /// Returns the batch loss and fills `grads`.
    pub(crate) fn backward_into(
        &self,
        inputs: &Matrix,
        targets: &[f64],
        ws: &mut Workspace,
        grads: &mut Gradients,
    ) -> Result<f64, NnError> {
        let batch = ws.batch();
        if targets.len() != batch {
            return Err(NnError::ShapeMismatch { expected: batch, got: targets.len() });
        }
        let n = self.layers.len();
        let inv_b = 1.0 / batch as f64;
        let mut abs_sum = 0.0;
        {
            let out = ws.post[n - 1].as_slice();
            let delta = ws.delta[n - 1].as_mut_slice();
            for ((d, &p), &t) in delta.iter_mut().zip(out).zip(targets) {
                let r = p - t;
                abs_sum += libm::fabs(r);
                *d = if r > 0.0 {
                    inv_b
                } else if r < 0.0 {
                    -inv_b
                } else {
                    0.0
                };
            }
            // Output layer is linear, so delta already is dL/dz.
        }
        for k in (0..n).rev() {
            let layer = &self.layers[k];
            let x = if k == 0 { inputs } else { &ws.post[k - 1] };
            gemm(1.0, x, true, &ws.delta[k], false, 0.0, &mut grads.weights[k]);
            if k + 1 < n && self.l2_factor != 0.0 {
                let scale = 2.0 * self.l2_factor;
                for (g, &w) in grads.weights[k].as_mut_slice().iter_mut().zip(layer.weights.as_slice()) {
                    *g += scale * w;
                }
            }
            let gb = &mut grads.biases[k];
            gb.iter_mut().for_each(|v| *v = 0.0);
            let delta = &ws.delta[k];
            for r in 0..delta.rows() {
                for (g, &d) in gb.iter_mut().zip(delta.row(r)) {
                    *g += d;
                }
            }
            if k > 0 {
                let (lower, upper) = ws.delta.split_at_mut(k);
                let below = &mut lower[k - 1];
                gemm(1.0, &upper[0], false, &layer.weights, true, 0.0, below);
                let act = self.layers[k - 1].activation;
                let pre = ws.pre[k - 1].as_slice();
                let post = ws.post[k - 1].as_slice();
                for ((d, &u), &a) in below.as_mut_slice().iter_mut().zip(pre).zip(post) {
                    *d *= act.derivative(u, a);
                }
            }
        }
        Ok(abs_sum * inv_b + self.l2_penalty())
    }
}

/// Mean absolute error plus the hidden-layer L2 penalty.
pub fn loss(predictions: &Matrix, targets: &[f64], model: &MlpModel) -> Result<f64, NnError> {
    if predictions.cols() != 1 {
        return Err(NnError::ShapeMismatch { expected: 1, got: predictions.cols() });
    }
    if predictions.rows() != targets.len() {
        return Err(NnError::ShapeMismatch { expected: predictions.rows(), got: targets.len() });
    }
    if targets.is_empty() {
        return Err(NnError::EmptyBatch);
    }
    let mae = predictions
        .as_slice()
        .iter()
        .zip(targets)
        .map(|(p, t)| libm::fabs(p - t))
        .sum::<f64>()
        / targets.len() as f64;
    Ok(mae + model.l2_penalty())
}

/// Loss and exact gradients for one batch. The MAE subgradient at a zero
/// residual is taken as 0.
pub fn backward(model: &MlpModel, inputs: &Matrix, targets: &[f64]) -> Result<(f64, Gradients), NnError> {
    if inputs.rows() == 0 {
        return Err(NnError::EmptyBatch);
    }
    let mut ws = Workspace::new(model, inputs.rows());
    model.forward_into(inputs, &mut ws)?;
    let mut grads = Gradients::zeros_like(model);
    let value = model.backward_into(inputs, targets, &mut ws, &mut grads)?;
    Ok((value, grads))
}
