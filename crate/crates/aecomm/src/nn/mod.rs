//! Minimal neural-network engine sized for the tiny encoder/decoder
//! networks used here: dense and convolutional layers, eLU/ReLU/Softmax
//! activations, cross-entropy loss, exact reverse-mode gradients with
//! respect to both parameters and inputs, and an Adam optimizer.
//!
//! Networks are immutable values during inference; [`Network::forward`] and
//! the backward passes are pure functions and safe to call from many
//! threads on shared parameters.
//!
//! Convolutions are stride-1 with "same" zero padding; those choices are
//! fixed rather than configurable because they are the only ones the
//! supported architectures need.

mod adam;

pub use adam::{AdamHyper, AdamState};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::util::{argmax_lowest, dot};
use crate::{Error, Result, Tensor};

/// Elementwise activation applied after a layer's linear map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// x for x >= 0, exp(x) - 1 for x < 0.
    Elu,
    Relu,
    Linear,
    /// Allowed only on the final layer of a network.
    Softmax,
}

impl Activation {
    fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Elu => {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v = v.exp() - 1.0;
                    }
                }
            }
            Activation::Relu => {
                for v in z.iter_mut() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            Activation::Linear => {}
            Activation::Softmax => softmax(z),
        }
    }

    /// Derivative of the activation recovered from its *output* value.
    /// Not defined for Softmax, which is only differentiated jointly with
    /// the cross-entropy loss.
    fn grad_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Elu => {
                if out >= 0.0 {
                    1.0
                } else {
                    out + 1.0 // exp(x) for x < 0
                }
            }
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
            Activation::Softmax => unreachable!("softmax gradient is handled via the loss"),
        }
    }
}

/// Numerically stable softmax (max subtraction), in place.
pub fn softmax(z: &mut [f64]) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in z.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in z.iter_mut() {
        *v /= sum;
    }
}

/// Layer shape and kind. Convolutions are stride-1, "same" zero padding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerKind {
    Dense {
        input_dim: usize,
        output_dim: usize,
    },
    Conv1d {
        input_channels: usize,
        input_width: usize,
        filters: usize,
        kernel_size: usize,
    },
    Conv2d {
        input_channels: usize,
        input_height: usize,
        input_width: usize,
        filters: usize,
        kernel_rows: usize,
        kernel_cols: usize,
    },
    /// Reinterprets its input as a flat vector; identity on values.
    Flatten { input_shape: Vec<usize> },
    /// Rescales so the mean square of the components is exactly 0.5.
    Normalize { dim: usize },
}

/// One layer: a linear/structural map followed by an activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(kind: LayerKind, activation: Activation) -> Self {
        LayerSpec { kind, activation }
    }

    /// Flat input length.
    pub fn input_len(&self) -> usize {
        match &self.kind {
            LayerKind::Dense { input_dim, .. } => *input_dim,
            LayerKind::Conv1d {
                input_channels,
                input_width,
                ..
            } => input_channels * input_width,
            LayerKind::Conv2d {
                input_channels,
                input_height,
                input_width,
                ..
            } => input_channels * input_height * input_width,
            LayerKind::Flatten { input_shape } => input_shape.iter().product(),
            LayerKind::Normalize { dim } => *dim,
        }
    }

    /// Flat output length.
    pub fn output_len(&self) -> usize {
        match &self.kind {
            LayerKind::Dense { output_dim, .. } => *output_dim,
            LayerKind::Conv1d {
                filters,
                input_width,
                ..
            } => filters * input_width,
            LayerKind::Conv2d {
                filters,
                input_height,
                input_width,
                ..
            } => filters * input_height * input_width,
            LayerKind::Flatten { input_shape } => input_shape.iter().product(),
            LayerKind::Normalize { dim } => *dim,
        }
    }

    /// Weight and bias shapes for parameterized layers.
    pub fn param_shapes(&self) -> Option<(Vec<usize>, Vec<usize>)> {
        match &self.kind {
            LayerKind::Dense {
                input_dim,
                output_dim,
            } => Some((vec![*output_dim, *input_dim], vec![*output_dim])),
            LayerKind::Conv1d {
                input_channels,
                filters,
                kernel_size,
                ..
            } => Some((
                vec![*filters, *input_channels, *kernel_size],
                vec![*filters],
            )),
            LayerKind::Conv2d {
                input_channels,
                filters,
                kernel_rows,
                kernel_cols,
                ..
            } => Some((
                vec![*filters, *input_channels, *kernel_rows, *kernel_cols],
                vec![*filters],
            )),
            LayerKind::Flatten { .. } | LayerKind::Normalize { .. } => None,
        }
    }
}

/// Weights and biases of one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub weights: Tensor,
    pub biases: Tensor,
}

/// Per-layer parameter tensors, aligned with a layer-spec list
/// (`None` for layers without parameters).
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    layers: Vec<Option<LayerParams>>,
}

impl NetworkParams {
    /// Zero-valued parameters shaped for the given layers.
    pub fn zeros(specs: &[LayerSpec]) -> Self {
        let layers = specs
            .iter()
            .map(|s| {
                s.param_shapes().map(|(w, b)| LayerParams {
                    weights: Tensor::zeros(w),
                    biases: Tensor::zeros(b),
                })
            })
            .collect();
        NetworkParams { layers }
    }

    /// Glorot-uniform weights, zero biases. Draw order is fixed: layer by
    /// layer, weights in row-major order.
    pub fn glorot<R: Rng + ?Sized>(specs: &[LayerSpec], rng: &mut R) -> Self {
        let mut params = Self::zeros(specs);
        for (spec, slot) in specs.iter().zip(params.layers.iter_mut()) {
            if let Some(p) = slot {
                let (fan_in, fan_out) = match &spec.kind {
                    LayerKind::Dense {
                        input_dim,
                        output_dim,
                    } => (*input_dim, *output_dim),
                    LayerKind::Conv1d {
                        input_channels,
                        filters,
                        kernel_size,
                        ..
                    } => (input_channels * kernel_size, filters * kernel_size),
                    LayerKind::Conv2d {
                        input_channels,
                        filters,
                        kernel_rows,
                        kernel_cols,
                        ..
                    } => (
                        input_channels * kernel_rows * kernel_cols,
                        filters * kernel_rows * kernel_cols,
                    ),
                    _ => unreachable!(),
                };
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for w in p.weights.data_mut() {
                    *w = rng.random_range(-limit..limit);
                }
            }
        }
        params
    }

    pub fn layer(&self, idx: usize) -> Option<&LayerParams> {
        self.layers[idx].as_ref()
    }

    pub fn layers(&self) -> &[Option<LayerParams>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Option<LayerParams>] {
        &mut self.layers
    }

    /// `self += scale * other`, elementwise over all tensors.
    pub fn add_scaled(&mut self, other: &NetworkParams, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(other.layers.iter()) {
            match (a, b) {
                (Some(pa), Some(pb)) => {
                    for (x, y) in pa.weights.data_mut().iter_mut().zip(pb.weights.data()) {
                        *x += scale * y;
                    }
                    for (x, y) in pa.biases.data_mut().iter_mut().zip(pb.biases.data()) {
                        *x += scale * y;
                    }
                }
                (None, None) => {}
                _ => panic!("mismatched parameter structure"),
            }
        }
    }

    /// Multiplies every element by `scale`.
    pub fn scale(&mut self, scale: f64) {
        for p in self.layers.iter_mut().flatten() {
            for x in p.weights.data_mut() {
                *x *= scale;
            }
            for x in p.biases.data_mut() {
                *x *= scale;
            }
        }
    }

    fn check_shapes(&self, specs: &[LayerSpec]) -> Result<()> {
        if self.layers.len() != specs.len() {
            return Err(Error::Config(format!(
                "parameter list has {} entries for {} layers",
                self.layers.len(),
                specs.len()
            )));
        }
        for (idx, (spec, p)) in specs.iter().zip(self.layers.iter()).enumerate() {
            match (spec.param_shapes(), p) {
                (None, None) => {}
                (Some((ws, bs)), Some(lp)) => {
                    if lp.weights.shape() != ws.as_slice() || lp.biases.shape() != bs.as_slice() {
                        return Err(Error::Config(format!(
                            "layer {idx} parameter shapes {:?}/{:?} do not match spec {:?}/{:?}",
                            lp.weights.shape(),
                            lp.biases.shape(),
                            ws,
                            bs
                        )));
                    }
                }
                (Some(_), None) => {
                    return Err(Error::Config(format!("layer {idx} is missing parameters")))
                }
                (None, Some(_)) => {
                    return Err(Error::Config(format!(
                        "layer {idx} takes no parameters but some were provided"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Per-layer activations recorded during a forward pass.
///
/// `activations[0]` is the network input; `activations[i + 1]` is the
/// post-activation output of layer `i`.
#[derive(Debug, Clone)]
pub struct Trace {
    activations: Vec<Vec<f64>>,
}

impl Trace {
    pub fn input(&self) -> &[f64] {
        &self.activations[0]
    }

    pub fn layer_output(&self, layer: usize) -> &[f64] {
        &self.activations[layer + 1]
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace is never empty")
    }
}

/// Gradients produced by a backward pass.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub params: NetworkParams,
    pub input: Vec<f64>,
}

/// A validated stack of layers plus their parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    specs: Vec<LayerSpec>,
    params: NetworkParams,
}

impl Network {
    /// Validates layer wiring (adjacent dimensions, Softmax only last,
    /// Flatten/Normalize carry no activation) and parameter shapes.
    pub fn new(specs: Vec<LayerSpec>, params: NetworkParams) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Config("network has no layers".into()));
        }
        for (idx, pair) in specs.windows(2).enumerate() {
            if pair[0].output_len() != pair[1].input_len() {
                return Err(Error::Config(format!(
                    "layer {} output length {} does not match layer {} input length {}",
                    idx,
                    pair[0].output_len(),
                    idx + 1,
                    pair[1].input_len()
                )));
            }
        }
        for (idx, spec) in specs.iter().enumerate() {
            if spec.activation == Activation::Softmax && idx + 1 != specs.len() {
                return Err(Error::Config(format!(
                    "layer {idx} uses softmax but is not the final layer"
                )));
            }
            if matches!(
                spec.kind,
                LayerKind::Flatten { .. } | LayerKind::Normalize { .. }
            ) && spec.activation != Activation::Linear
            {
                return Err(Error::Config(format!(
                    "layer {idx} is structural and must use the linear activation"
                )));
            }
        }
        params.check_shapes(&specs)?;
        Ok(Network { specs, params })
    }

    /// Network with Glorot-initialized parameters.
    pub fn glorot<R: Rng + ?Sized>(specs: Vec<LayerSpec>, rng: &mut R) -> Result<Self> {
        let params = NetworkParams::glorot(&specs, rng);
        Network::new(specs, params)
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut NetworkParams {
        &mut self.params
    }

    pub fn input_len(&self) -> usize {
        self.specs[0].input_len()
    }

    pub fn output_len(&self) -> usize {
        self.specs.last().unwrap().output_len()
    }

    /// Whether the final layer ends in softmax (i.e. outputs probabilities).
    pub fn ends_in_softmax(&self) -> bool {
        self.specs.last().unwrap().activation == Activation::Softmax
    }

    /// Runs the network, recording every intermediate activation.
    pub fn forward(&self, input: &[f64]) -> Result<Trace> {
        if input.len() != self.input_len() {
            return Err(Error::Shape {
                layer: 0,
                msg: format!(
                    "input length {} does not match expected {}",
                    input.len(),
                    self.input_len()
                ),
            });
        }
        let mut activations = Vec::with_capacity(self.specs.len() + 1);
        activations.push(input.to_vec());
        for (idx, spec) in self.specs.iter().enumerate() {
            let out = forward_layer(spec, self.params.layer(idx), activations.last().unwrap())
                .map_err(|e| attribute_layer(e, idx))?;
            activations.push(out);
        }
        Ok(Trace { activations })
    }

    /// Reverse-mode gradients of the cross-entropy loss at `target_label`,
    /// with respect to all parameters and to the network input. Requires a
    /// softmax-terminated network.
    pub fn backward_from_label(&self, trace: &Trace, target_label: usize) -> Result<Gradients> {
        if !self.ends_in_softmax() {
            return Err(Error::Argument(
                "label-based backward requires a softmax final layer".into(),
            ));
        }
        let probs = trace.output();
        if target_label >= probs.len() {
            return Err(Error::Argument(format!(
                "label {} out of range for {} classes",
                target_label,
                probs.len()
            )));
        }
        // d loss / d logits for softmax + cross-entropy.
        let mut d_logits = probs.to_vec();
        d_logits[target_label] -= 1.0;
        self.backward_pass(trace, d_logits, true)
    }

    /// Reverse-mode gradients given an upstream gradient with respect to the
    /// network output. Not valid for softmax-terminated networks (use
    /// [`Network::backward_from_label`] there).
    pub fn backward_from_output_grad(&self, trace: &Trace, output_grad: &[f64]) -> Result<Gradients> {
        if self.ends_in_softmax() {
            return Err(Error::Argument(
                "softmax-terminated networks must use label-based backward".into(),
            ));
        }
        if output_grad.len() != self.output_len() {
            return Err(Error::Argument(format!(
                "output gradient length {} does not match network output {}",
                output_grad.len(),
                self.output_len()
            )));
        }
        self.backward_pass(trace, output_grad.to_vec(), false)
    }

    /// `upstream` is d loss / d logits of the last layer when
    /// `at_last_logits` is true, otherwise d loss / d output.
    fn backward_pass(
        &self,
        trace: &Trace,
        upstream: Vec<f64>,
        at_last_logits: bool,
    ) -> Result<Gradients> {
        let mut grads = NetworkParams::zeros(&self.specs);
        let mut d_out = upstream;
        for idx in (0..self.specs.len()).rev() {
            let spec = &self.specs[idx];
            let output = trace.layer_output(idx);
            // Gradient through the activation, except where the upstream
            // already sits at the final layer's logits.
            let d_z: Vec<f64> = if at_last_logits && idx + 1 == self.specs.len() {
                d_out
            } else {
                output
                    .iter()
                    .zip(d_out.iter())
                    .map(|(o, g)| g * spec.activation.grad_from_output(*o))
                    .collect()
            };
            let input = &trace.activations[idx];
            let (layer_grads, d_in) =
                backward_layer(spec, self.params.layer(idx), input, &d_z)
                    .map_err(|e| attribute_layer(e, idx))?;
            grads.layers_mut()[idx] = layer_grads;
            d_out = d_in;
        }
        Ok(Gradients {
            params: grads,
            input: d_out,
        })
    }
}

fn attribute_layer(e: Error, idx: usize) -> Error {
    match e {
        Error::Shape { msg, .. } => Error::Shape { layer: idx, msg },
        other => other,
    }
}

fn forward_layer(
    spec: &LayerSpec,
    params: Option<&LayerParams>,
    input: &[f64],
) -> Result<Vec<f64>> {
    if input.len() != spec.input_len() {
        return Err(Error::Shape {
            layer: 0,
            msg: format!(
                "got input of length {}, expected {}",
                input.len(),
                spec.input_len()
            ),
        });
    }
    let mut z = match &spec.kind {
        LayerKind::Dense {
            input_dim,
            output_dim,
        } => {
            let p = params.expect("validated");
            let w = p.weights.data();
            let b = p.biases.data();
            let mut z = Vec::with_capacity(*output_dim);
            for o in 0..*output_dim {
                z.push(b[o] + dot(&w[o * input_dim..(o + 1) * input_dim], input));
            }
            z
        }
        LayerKind::Conv1d {
            input_channels,
            input_width,
            filters,
            kernel_size,
        } => {
            let p = params.expect("validated");
            let w = p.weights.data();
            let b = p.biases.data();
            let (c_in, width, k) = (*input_channels, *input_width, *kernel_size);
            let pad = (k - 1) / 2;
            let mut z = vec![0.0; filters * width];
            for f in 0..*filters {
                for x in 0..width {
                    let mut acc = b[f];
                    for c in 0..c_in {
                        for t in 0..k {
                            let ix = x + t;
                            if ix >= pad && ix - pad < width {
                                acc += w[(f * c_in + c) * k + t] * input[c * width + ix - pad];
                            }
                        }
                    }
                    z[f * width + x] = acc;
                }
            }
            z
        }
        LayerKind::Conv2d {
            input_channels,
            input_height,
            input_width,
            filters,
            kernel_rows,
            kernel_cols,
        } => {
            let p = params.expect("validated");
            let w = p.weights.data();
            let b = p.biases.data();
            let (c_in, h, wd) = (*input_channels, *input_height, *input_width);
            let (kr, kc) = (*kernel_rows, *kernel_cols);
            let (pr, pc) = ((kr - 1) / 2, (kc - 1) / 2);
            let mut z = vec![0.0; filters * h * wd];
            for f in 0..*filters {
                for i in 0..h {
                    for j in 0..wd {
                        let mut acc = b[f];
                        for c in 0..c_in {
                            for u in 0..kr {
                                let iy = i + u;
                                if iy < pr || iy - pr >= h {
                                    continue;
                                }
                                for v in 0..kc {
                                    let jx = j + v;
                                    if jx >= pc && jx - pc < wd {
                                        acc += w[((f * c_in + c) * kr + u) * kc + v]
                                            * input[(c * h + iy - pr) * wd + jx - pc];
                                    }
                                }
                            }
                        }
                        z[(f * h + i) * wd + j] = acc;
                    }
                }
            }
            z
        }
        LayerKind::Flatten { .. } => input.to_vec(),
        LayerKind::Normalize { dim } => {
            let ss: f64 = input.iter().map(|v| v * v).sum();
            if ss == 0.0 {
                return Err(Error::Degenerate(
                    "cannot power-normalize an all-zero signal".into(),
                ));
            }
            let scale = (0.5 * *dim as f64 / ss).sqrt();
            input.iter().map(|v| v * scale).collect()
        }
    };
    spec.activation.apply(&mut z);
    Ok(z)
}

/// Gradients of the layer's linear/structural map: given d loss / d z
/// (pre-activation), returns parameter gradients and d loss / d input.
fn backward_layer(
    spec: &LayerSpec,
    params: Option<&LayerParams>,
    input: &[f64],
    d_z: &[f64],
) -> Result<(Option<LayerParams>, Vec<f64>)> {
    match &spec.kind {
        LayerKind::Dense {
            input_dim,
            output_dim,
        } => {
            let p = params.expect("validated");
            let w = p.weights.data();
            let mut dw = vec![0.0; w.len()];
            let mut d_in = vec![0.0; *input_dim];
            for o in 0..*output_dim {
                let g = d_z[o];
                let row = o * input_dim;
                for i in 0..*input_dim {
                    dw[row + i] = g * input[i];
                    d_in[i] += w[row + i] * g;
                }
            }
            let grads = LayerParams {
                weights: Tensor::from_vec(vec![*output_dim, *input_dim], dw)?,
                biases: Tensor::vector(d_z.to_vec()),
            };
            Ok((Some(grads), d_in))
        }
        LayerKind::Conv1d {
            input_channels,
            input_width,
            filters,
            kernel_size,
        } => {
            let p = params.expect("validated");
            let w = p.weights.data();
            let (c_in, width, k) = (*input_channels, *input_width, *kernel_size);
            let pad = (k - 1) / 2;
            let mut dw = vec![0.0; w.len()];
            let mut db = vec![0.0; *filters];
            let mut d_in = vec![0.0; c_in * width];
            for f in 0..*filters {
                for x in 0..width {
                    let g = d_z[f * width + x];
                    db[f] += g;
                    for c in 0..c_in {
                        for t in 0..k {
                            let ix = x + t;
                            if ix >= pad && ix - pad < width {
                                let widx = (f * c_in + c) * k + t;
                                let iidx = c * width + ix - pad;
                                dw[widx] += input[iidx] * g;
                                d_in[iidx] += w[widx] * g;
                            }
                        }
                    }
                }
            }
            let grads = LayerParams {
                weights: Tensor::from_vec(vec![*filters, c_in, k], dw)?,
                biases: Tensor::vector(db),
            };
            Ok((Some(grads), d_in))
        }
        LayerKind::Conv2d {
            input_channels,
            input_height,
            input_width,
            filters,
            kernel_rows,
            kernel_cols,
        } => {
            let p = params.expect("validated");
            let w = p.weights.data();
            let (c_in, h, wd) = (*input_channels, *input_height, *input_width);
            let (kr, kc) = (*kernel_rows, *kernel_cols);
            let (pr, pc) = ((kr - 1) / 2, (kc - 1) / 2);
            let mut dw = vec![0.0; w.len()];
            let mut db = vec![0.0; *filters];
            let mut d_in = vec![0.0; c_in * h * wd];
            for f in 0..*filters {
                for i in 0..h {
                    for j in 0..wd {
                        let g = d_z[(f * h + i) * wd + j];
                        db[f] += g;
                        for c in 0..c_in {
                            for u in 0..kr {
                                let iy = i + u;
                                if iy < pr || iy - pr >= h {
                                    continue;
                                }
                                for v in 0..kc {
                                    let jx = j + v;
                                    if jx >= pc && jx - pc < wd {
                                        let widx = ((f * c_in + c) * kr + u) * kc + v;
                                        let iidx = (c * h + iy - pr) * wd + jx - pc;
                                        dw[widx] += input[iidx] * g;
                                        d_in[iidx] += w[widx] * g;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let grads = LayerParams {
                weights: Tensor::from_vec(vec![*filters, c_in, kr, kc], dw)?,
                biases: Tensor::vector(db),
            };
            Ok((Some(grads), d_in))
        }
        LayerKind::Flatten { .. } => Ok((None, d_z.to_vec())),
        LayerKind::Normalize { dim } => {
            let ss: f64 = input.iter().map(|v| v * v).sum();
            if ss == 0.0 {
                return Err(Error::Degenerate(
                    "cannot power-normalize an all-zero signal".into(),
                ));
            }
            let scale = (0.5 * *dim as f64 / ss).sqrt();
            let xg = dot(input, d_z);
            let d_in = input
                .iter()
                .zip(d_z.iter())
                .map(|(x, g)| scale * (g - x * xg / ss))
                .collect();
            Ok((None, d_in))
        }
    }
}

/// Cross-entropy loss of a probability vector against a target label.
///
/// The probability at the target is floored at 1e-12 before the log.
pub fn cross_entropy(probs: &[f64], target_label: usize) -> Result<f64> {
    if target_label >= probs.len() {
        return Err(Error::Argument(format!(
            "label {} out of range for {} classes",
            target_label,
            probs.len()
        )));
    }
    if probs.iter().any(|p| *p < 0.0) {
        return Err(Error::Argument("probabilities must be nonnegative".into()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Argument(format!(
            "probabilities sum to {sum}, not 1 within 1e-9"
        )));
    }
    Ok(-probs[target_label].max(1e-12).ln())
}

/// Index of the most probable class, lowest index on ties.
pub fn argmax(probs: &[f64]) -> usize {
    argmax_lowest(probs)
}
