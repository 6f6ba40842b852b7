//! The MLP and CNN autoencoder communication systems: architecture
//! construction, end-to-end training through the AWGN channel, message
//! encoding/decoding, and the model file format.
//!
//! The encoder maps a one-hot message of length `M = 2^k` to a length-`2n`
//! signal whose components have mean square exactly 0.5 (the transmit power
//! constraint, enforced by the final Normalize layer). The decoder maps a
//! received length-`2n` vector to a probability vector over the `M`
//! messages.
//!
//! The CNN decoder views the received vector as a 2 x n grid (real row,
//! imaginary row); the grid permutation and its inverse sit inside the
//! differentiable path so attack gradients are taken in the signal domain.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{awgn, noise_variance};
use crate::nn::{
    argmax, cross_entropy, Activation, AdamHyper, AdamState, LayerKind, LayerParams, LayerSpec,
    Network, NetworkParams,
};
use crate::util::argmax_lowest;
use crate::{Error, Result};

/// Which of the two supported architectures a model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArchName {
    Mlp,
    Cnn,
}

impl fmt::Display for ArchName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchName::Mlp => write!(f, "mlp"),
            ArchName::Cnn => write!(f, "cnn"),
        }
    }
}

impl std::str::FromStr for ArchName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mlp" => Ok(ArchName::Mlp),
            "cnn" => Ok(ArchName::Cnn),
            other => Err(Error::Argument(format!("unknown architecture '{other}'"))),
        }
    }
}

/// How the decoder interprets the received length-2n vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderView {
    /// Fed to the decoder as-is.
    Flat,
    /// Deinterleaved into a 2 x n grid: row 0 the real parts, row 1 the
    /// imaginary parts.
    ComplexGrid,
}

/// Autoencoder architecture: encoder and decoder layer stacks plus the
/// code parameters they realize.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderArch {
    pub name: ArchName,
    pub k: usize,
    pub n: usize,
    pub encoder: Vec<LayerSpec>,
    pub decoder: Vec<LayerSpec>,
}

impl AutoencoderArch {
    pub fn message_count(&self) -> usize {
        1 << self.k
    }

    pub fn signal_len(&self) -> usize {
        2 * self.n
    }

    pub fn decoder_view(&self) -> DecoderView {
        match self.name {
            ArchName::Mlp => DecoderView::Flat,
            ArchName::Cnn => DecoderView::ComplexGrid,
        }
    }

    pub fn build(name: ArchName, k: usize, n: usize) -> Result<Self> {
        match name {
            ArchName::Mlp => build_mlp(k, n),
            ArchName::Cnn => build_cnn(k, n),
        }
    }
}

fn check_code_params(k: usize, n: usize) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::Argument("k and n must be at least 1".into()));
    }
    if k > 20 {
        return Err(Error::Argument(format!(
            "k = {k} gives an impractically large message set"
        )));
    }
    Ok(())
}

fn dense(input_dim: usize, output_dim: usize, activation: Activation) -> LayerSpec {
    LayerSpec::new(
        LayerKind::Dense {
            input_dim,
            output_dim,
        },
        activation,
    )
}

/// MLP autoencoder:
/// encoder `Dense(M->M)+eLU, Dense(M->2n)+Linear, Normalize`;
/// decoder `Dense(2n->M)+ReLU, Dense(M->M)+Softmax`.
pub fn build_mlp(k: usize, n: usize) -> Result<AutoencoderArch> {
    check_code_params(k, n)?;
    let m = 1usize << k;
    let encoder = vec![
        dense(m, m, Activation::Elu),
        dense(m, 2 * n, Activation::Linear),
        LayerSpec::new(LayerKind::Normalize { dim: 2 * n }, Activation::Linear),
    ];
    let decoder = vec![
        dense(2 * n, m, Activation::Relu),
        dense(m, m, Activation::Softmax),
    ];
    Ok(AutoencoderArch {
        name: ArchName::Mlp,
        k,
        n,
        encoder,
        decoder,
    })
}

/// CNN autoencoder:
/// encoder `Dense(M->M)+eLU, Conv1d(16 filters)+Flatten (out 16M),
/// Dense(16M->2n)+Linear, Normalize`;
/// decoder `Conv2d(16 filters) (out 16 x 2n), Conv2d(8 filters)+Flatten
/// (out 8*2n), Dense(->2M)+ReLU, Dense(2M->M)+Softmax`, operating on the
/// 2 x n complex-grid view of the received vector.
pub fn build_cnn(k: usize, n: usize) -> Result<AutoencoderArch> {
    check_code_params(k, n)?;
    let m = 1usize << k;
    let encoder = vec![
        dense(m, m, Activation::Elu),
        LayerSpec::new(
            LayerKind::Conv1d {
                input_channels: 1,
                input_width: m,
                filters: 16,
                kernel_size: 3,
            },
            Activation::Relu,
        ),
        LayerSpec::new(
            LayerKind::Flatten {
                input_shape: vec![16, m],
            },
            Activation::Linear,
        ),
        dense(16 * m, 2 * n, Activation::Linear),
        LayerSpec::new(LayerKind::Normalize { dim: 2 * n }, Activation::Linear),
    ];
    let decoder = vec![
        LayerSpec::new(
            LayerKind::Conv2d {
                input_channels: 1,
                input_height: 2,
                input_width: n,
                filters: 16,
                kernel_rows: 3,
                kernel_cols: 3,
            },
            Activation::Relu,
        ),
        LayerSpec::new(
            LayerKind::Conv2d {
                input_channels: 16,
                input_height: 2,
                input_width: n,
                filters: 8,
                kernel_rows: 3,
                kernel_cols: 3,
            },
            Activation::Relu,
        ),
        LayerSpec::new(
            LayerKind::Flatten {
                input_shape: vec![8, 2, n],
            },
            Activation::Linear,
        ),
        dense(8 * 2 * n, 2 * m, Activation::Relu),
        dense(2 * m, m, Activation::Softmax),
    ];
    Ok(AutoencoderArch {
        name: ArchName::Cnn,
        k,
        n,
        encoder,
        decoder,
    })
}

/// Training hyperparameters. All randomness flows from `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Number of optimizer steps; each step trains on one fresh batch.
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Channel Eb/N0 during training, in dB. `+inf` disables noise.
    pub train_ebno_db: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// Default schedule with an explicit seed.
    pub fn with_seed(seed: u64) -> Self {
        TrainConfig {
            epochs: 10_000,
            batch_size: 256,
            learning_rate: 1e-3,
            train_ebno_db: 7.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Argument(
                "epochs and batch size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument("learning rate must be positive".into()));
        }
        if self.train_ebno_db.is_nan() || self.train_ebno_db == f64::NEG_INFINITY {
            return Err(Error::Argument("train Eb/N0 must not be NaN or -inf".into()));
        }
        Ok(())
    }
}

/// A trained encoder/decoder pair. Immutable after training; inference is
/// thread-safe.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedAutoencoder {
    pub arch: AutoencoderArch,
    encoder: Network,
    decoder: Network,
    pub train_config: TrainConfig,
    /// Mean batch cross-entropy per epoch.
    pub loss_history: Vec<f64>,
}

impl TrainedAutoencoder {
    /// Stable identifier used in perturbation provenance.
    pub fn model_id(&self) -> String {
        format!(
            "{}-k{}n{}-seed{}",
            self.arch.name, self.arch.k, self.arch.n, self.train_config.seed
        )
    }

    pub fn encoder(&self) -> &Network {
        &self.encoder
    }

    pub fn decoder(&self) -> &Network {
        &self.decoder
    }

    fn one_hot(&self, s: usize) -> Result<Vec<f64>> {
        let m = self.arch.message_count();
        if s >= m {
            return Err(Error::Argument(format!(
                "message {s} out of range for {m} messages"
            )));
        }
        let mut v = vec![0.0; m];
        v[s] = 1.0;
        Ok(v)
    }

    /// Power-normalized transmit signal for message `s`.
    pub fn encode(&self, s: usize) -> Result<Vec<f64>> {
        let input = self.one_hot(s)?;
        let trace = self.encoder.forward(&input)?;
        Ok(trace.output().to_vec())
    }

    /// All `M` transmit signals, indexed by message.
    pub fn codebook(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.arch.message_count()).map(|s| self.encode(s)).collect()
    }

    /// Decoder probabilities and the hard decision (lowest index on ties).
    pub fn decode(&self, y: &[f64]) -> Result<(Vec<f64>, usize)> {
        let input = self.decoder_input(y)?;
        let trace = self.decoder.forward(&input)?;
        let probs = trace.output().to_vec();
        let s_hat = argmax(&probs);
        Ok((probs, s_hat))
    }

    /// Gradient of the cross-entropy loss at `label` with respect to the
    /// received signal `y`, in signal (interleaved) coordinates.
    pub fn decoder_input_gradient(&self, y: &[f64], label: usize) -> Result<Vec<f64>> {
        let input = self.decoder_input(y)?;
        let trace = self.decoder.forward(&input)?;
        let grads = self.decoder.backward_from_label(&trace, label)?;
        Ok(self.signal_grad_from_view(&grads.input))
    }

    /// Fraction of the `M` messages decoded correctly over a noise-free
    /// channel.
    pub fn clean_accuracy(&self) -> Result<f64> {
        let m = self.arch.message_count();
        let mut correct = 0usize;
        for s in 0..m {
            let x = self.encode(s)?;
            let (_, s_hat) = self.decode(&x)?;
            if s_hat == s {
                correct += 1;
            }
        }
        Ok(correct as f64 / m as f64)
    }

    fn decoder_input(&self, y: &[f64]) -> Result<Vec<f64>> {
        let len = self.arch.signal_len();
        if y.len() != len {
            return Err(Error::Argument(format!(
                "received vector length {} does not match 2n = {}",
                y.len(),
                len
            )));
        }
        match self.arch.decoder_view() {
            DecoderView::Flat => Ok(y.to_vec()),
            DecoderView::ComplexGrid => {
                let n = self.arch.n;
                let mut g = vec![0.0; len];
                for j in 0..n {
                    g[j] = y[2 * j];
                    g[n + j] = y[2 * j + 1];
                }
                Ok(g)
            }
        }
    }

    fn signal_grad_from_view(&self, g: &[f64]) -> Vec<f64> {
        match self.arch.decoder_view() {
            DecoderView::Flat => g.to_vec(),
            DecoderView::ComplexGrid => {
                let n = self.arch.n;
                let mut out = vec![0.0; g.len()];
                for j in 0..n {
                    out[2 * j] = g[j];
                    out[2 * j + 1] = g[n + j];
                }
                out
            }
        }
    }
}

/// Trains the architecture end-to-end through the AWGN channel.
///
/// Each epoch samples `batch_size` messages uniformly with replacement,
/// passes them through encoder -> noise -> decoder, and applies one joint
/// Adam update on the mean cross-entropy. Additive noise has identity
/// gradient, so the decoder's input gradient backpropagates into the
/// encoder unchanged.
pub fn train(arch: &AutoencoderArch, config: &TrainConfig) -> Result<TrainedAutoencoder> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut encoder = Network::glorot(arch.encoder.clone(), &mut rng)?;
    let mut decoder = Network::glorot(arch.decoder.clone(), &mut rng)?;

    let hyper = AdamHyper {
        learning_rate: config.learning_rate,
        ..AdamHyper::default()
    };
    let mut enc_adam = AdamState::new(encoder.specs(), hyper);
    let mut dec_adam = AdamState::new(decoder.specs(), hyper);

    let m = arch.message_count();
    let sigma2 = noise_variance(config.train_ebno_db, arch.k, arch.n);
    let signal_len = arch.signal_len();
    let scale = 1.0 / config.batch_size as f64;

    let view = arch.decoder_view();
    let n = arch.n;

    let mut loss_history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let mut enc_grads = NetworkParams::zeros(encoder.specs());
        let mut dec_grads = NetworkParams::zeros(decoder.specs());
        let mut batch_loss = 0.0;

        for _ in 0..config.batch_size {
            let s = rng.random_range(0..m);
            let mut input = vec![0.0; m];
            input[s] = 1.0;

            let enc_trace = encoder.forward(&input)?;
            let x = enc_trace.output();
            let noise = awgn(signal_len, sigma2, &mut rng);

            let mut y: Vec<f64> = x.iter().zip(&noise).map(|(a, b)| a + b).collect();
            if view == DecoderView::ComplexGrid {
                let mut g = vec![0.0; signal_len];
                for j in 0..n {
                    g[j] = y[2 * j];
                    g[n + j] = y[2 * j + 1];
                }
                y = g;
            }

            let dec_trace = decoder.forward(&y)?;
            batch_loss += cross_entropy(dec_trace.output(), s)?;

            let dec_back = decoder.backward_from_label(&dec_trace, s)?;
            dec_grads.add_scaled(&dec_back.params, scale);

            let mut d_x = dec_back.input;
            if view == DecoderView::ComplexGrid {
                let mut sig = vec![0.0; signal_len];
                for j in 0..n {
                    sig[2 * j] = d_x[j];
                    sig[2 * j + 1] = d_x[n + j];
                }
                d_x = sig;
            }
            let enc_back = encoder.backward_from_output_grad(&enc_trace, &d_x)?;
            enc_grads.add_scaled(&enc_back.params, scale);
        }

        let mean_loss = batch_loss * scale;
        if !mean_loss.is_finite() {
            return Err(Error::Training {
                epoch,
                msg: format!("loss became {mean_loss}"),
            });
        }
        loss_history.push(mean_loss);

        enc_adam.apply(encoder.params_mut(), &enc_grads);
        dec_adam.apply(decoder.params_mut(), &dec_grads);
    }

    Ok(TrainedAutoencoder {
        arch: arch.clone(),
        encoder,
        decoder,
        train_config: *config,
        loss_history,
    })
}

// --- model file format -------------------------------------------------

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct TrainingMeta {
    seed: u64,
    epochs: usize,
    train_ebno_db: f64,
    batch_size: usize,
    learning_rate: f64,
    loss_history: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    arch_name: ArchName,
    /// Encoder layers followed by decoder layers; the encoder ends at its
    /// (single) Normalize layer.
    layers: Vec<LayerSpec>,
    /// Parameters keyed by layer index within `layers`.
    params: BTreeMap<String, LayerParams>,
    training_meta: TrainingMeta,
}

impl TrainedAutoencoder {
    /// Serializes the model to the JSON model format.
    pub fn to_json(&self) -> Result<String> {
        let mut layers = self.arch.encoder.clone();
        layers.extend(self.arch.decoder.iter().cloned());
        let mut params = BTreeMap::new();
        let all = self
            .encoder
            .params()
            .layers()
            .iter()
            .chain(self.decoder.params().layers());
        for (idx, p) in all.enumerate() {
            if let Some(p) = p {
                params.insert(idx.to_string(), p.clone());
            }
        }
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            arch_name: self.arch.name,
            layers,
            params,
            training_meta: TrainingMeta {
                seed: self.train_config.seed,
                epochs: self.train_config.epochs,
                train_ebno_db: self.train_config.train_ebno_db,
                batch_size: self.train_config.batch_size,
                learning_rate: self.train_config.learning_rate,
                loss_history: self.loss_history.clone(),
            },
        };
        Ok(serde_json::to_string(&file)?)
    }

    /// Parses a model from its JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                file.format_version
            )));
        }

        // The encoder ends at the single Normalize layer.
        let normalize_positions: Vec<usize> = file
            .layers
            .iter()
            .enumerate()
            .filter(|(_, l)| matches!(l.kind, LayerKind::Normalize { .. }))
            .map(|(i, _)| i)
            .collect();
        let [norm_idx] = normalize_positions.as_slice() else {
            return Err(Error::Config(
                "model must contain exactly one Normalize layer".into(),
            ));
        };
        let split = norm_idx + 1;
        if split == file.layers.len() {
            return Err(Error::Config("model has no decoder layers".into()));
        }

        let encoder_specs: Vec<LayerSpec> = file.layers[..split].to_vec();
        let decoder_specs: Vec<LayerSpec> = file.layers[split..].to_vec();

        let signal_len = encoder_specs.last().unwrap().output_len();
        if signal_len % 2 != 0 {
            return Err(Error::Config(format!(
                "encoder output length {signal_len} is not 2n for integer n"
            )));
        }
        let n = signal_len / 2;
        let m = decoder_specs.last().unwrap().output_len();
        if !m.is_power_of_two() {
            return Err(Error::Config(format!(
                "decoder output length {m} is not a power of two"
            )));
        }
        let k = m.trailing_zeros() as usize;

        let split_params = |range: std::ops::Range<usize>| -> Result<NetworkParams> {
            let specs = &file.layers[range.clone()];
            let mut params = NetworkParams::zeros(specs);
            for (local, global) in range.enumerate() {
                let expect = specs[local].param_shapes().is_some();
                match (expect, file.params.get(&global.to_string())) {
                    (true, Some(p)) => params.layers_mut()[local] = Some(p.clone()),
                    (true, None) => {
                        return Err(Error::Config(format!(
                            "model is missing parameters for layer {global}"
                        )))
                    }
                    (false, Some(_)) => {
                        return Err(Error::Config(format!(
                            "layer {global} takes no parameters but the model provides some"
                        )))
                    }
                    (false, None) => {}
                }
            }
            Ok(params)
        };

        let encoder = Network::new(encoder_specs.clone(), split_params(0..split)?)?;
        let decoder = Network::new(
            decoder_specs.clone(),
            split_params(split..file.layers.len())?,
        )?;
        if !decoder.ends_in_softmax() {
            return Err(Error::Config("decoder must end in softmax".into()));
        }

        let arch = AutoencoderArch {
            name: file.arch_name,
            k,
            n,
            encoder: encoder_specs,
            decoder: decoder_specs,
        };
        let meta = file.training_meta;
        Ok(TrainedAutoencoder {
            arch,
            encoder,
            decoder,
            train_config: TrainConfig {
                epochs: meta.epochs,
                batch_size: meta.batch_size,
                learning_rate: meta.learning_rate,
                train_ebno_db: meta.train_ebno_db,
                seed: meta.seed,
            },
            loss_history: meta.loss_history,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

/// Lowest-index argmax over decoder probabilities; exposed for callers that
/// work with raw probability vectors.
pub fn hard_decision(probs: &[f64]) -> usize {
    argmax_lowest(probs)
}
