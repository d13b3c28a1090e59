use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::check_finite;
use crate::error::{Result, ShadeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, x: &mut Array2<f64>) {
        if self == Activation::Relu {
            x.mapv_inplace(|v| v.max(0.0));
        }
    }
}

/// Fully connected layer computing `act(x · weight + bias)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `in_dim × out_dim`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.ncols()
    }

    fn forward(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut out = x.dot(&self.weight);
        out += &self.bias;
        self.activation.apply(&mut out);
        out
    }
}

/// Gradient (or Adam moment) of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerGrad {
    fn zeros_like(layer: &Dense) -> Self {
        Self {
            weight: Array2::zeros(layer.weight.raw_dim()),
            bias: Array1::zeros(layer.bias.raw_dim()),
        }
    }
}

/// Parameter-shaped values for the whole autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub encoder: Vec<LayerGrad>,
    pub decoder: Vec<LayerGrad>,
}

impl Gradients {
    pub fn zeros_like(state: &AutoencoderState) -> Self {
        Self {
            encoder: state.encoder.iter().map(LayerGrad::zeros_like).collect(),
            decoder: state.decoder.iter().map(LayerGrad::zeros_like).collect(),
        }
    }

    /// Layers in parameter order with their block name prefixes.
    pub(crate) fn layers(&self) -> impl Iterator<Item = (String, &LayerGrad)> {
        named(&self.encoder, "encoder").chain(named(&self.decoder, "decoder"))
    }
}

fn named<'a, T>(layers: &'a [T], prefix: &'static str) -> impl Iterator<Item = (String, &'a T)> {
    layers.iter().enumerate().map(move |(i, l)| (format!("{prefix}.{i}"), l))
}

/// Encoder and decoder stacks plus Adam state.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderState {
    pub encoder: Vec<Dense>,
    pub decoder: Vec<Dense>,
    pub(crate) first_moment: Gradients,
    pub(crate) second_moment: Gradients,
    pub(crate) step: u64,
}

/// Activations recorded during a forward pass, needed for backpropagation.
pub(crate) struct Trace {
    /// Input of each layer, followed by the final output.
    activations: Vec<Array2<f64>>,
}

impl Trace {
    pub(crate) fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("trace holds the input")
    }
}

pub(crate) fn forward_traced(layers: &[Dense], x: ArrayView2<'_, f64>) -> Trace {
    let mut activations = Vec::with_capacity(layers.len() + 1);
    activations.push(x.to_owned());
    for layer in layers {
        let next = layer.forward(activations.last().expect("non-empty").view());
        activations.push(next);
    }
    Trace { activations }
}

/// Backpropagates `d_out` (gradient w.r.t. the stack output) and returns
/// per-layer gradients and the gradient w.r.t. the stack input.
pub(crate) fn backward(layers: &[Dense], trace: &Trace, d_out: Array2<f64>) -> (Vec<LayerGrad>, Array2<f64>) {
    let mut grads = Vec::with_capacity(layers.len());
    let mut delta = d_out;
    for (l, layer) in layers.iter().enumerate().rev() {
        if layer.activation == Activation::Relu {
            // the output is zero exactly where the pre-activation was not positive
            ndarray::Zip::from(&mut delta)
                .and(&trace.activations[l + 1])
                .for_each(|d, &y| {
                    if y <= 0.0 {
                        *d = 0.0;
                    }
                });
        }
        let input = &trace.activations[l];
        grads.push(LayerGrad {
            weight: input.t().dot(&delta),
            bias: delta.sum_axis(Axis(0)),
        });
        delta = delta.dot(&layer.weight.t());
    }
    grads.reverse();
    (grads, delta)
}

/// Builds the symmetric stack `input → hidden… → embed → …hidden → input`.
///
/// Hidden layers use ReLU; the embedding and output layers are linear.
/// Weights are drawn from `U(−1/√fan_in, 1/√fan_in)` with a ChaCha8 stream
/// seeded by `seed`; biases start at zero.
pub fn init_autoencoder(input_dim: usize, hidden_dims: &[usize], embed_dim: usize, seed: u64) -> Result<AutoencoderState> {
    if input_dim == 0 || embed_dim == 0 || hidden_dims.contains(&0) {
        return Err(ShadeError::invalid("dims", "layer dimensions must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layer = |i: usize, o: usize, activation: Activation| {
        let bound = 1.0 / (i as f64).sqrt();
        Dense {
            weight: Array2::from_shape_simple_fn((i, o), || rng.random_range(-bound..=bound)),
            bias: Array1::zeros(o),
            activation,
        }
    };
    let mut enc_dims = vec![input_dim];
    enc_dims.extend_from_slice(hidden_dims);
    enc_dims.push(embed_dim);
    let dec_dims: Vec<usize> = enc_dims.iter().rev().copied().collect();
    let stack = |dims: &[usize], layer: &mut dyn FnMut(usize, usize, Activation) -> Dense| {
        (0..dims.len() - 1)
            .map(|k| {
                let act = if k + 2 == dims.len() { Activation::Linear } else { Activation::Relu };
                layer(dims[k], dims[k + 1], act)
            })
            .collect::<Vec<_>>()
    };
    let encoder = stack(&enc_dims, &mut layer);
    let decoder = stack(&dec_dims, &mut layer);
    Ok(AutoencoderState::from_layers(encoder, decoder))
}

impl AutoencoderState {
    /// Wraps explicit layers with fresh optimizer state.
    pub fn from_layers(encoder: Vec<Dense>, decoder: Vec<Dense>) -> Self {
        let mut state = Self {
            encoder,
            decoder,
            first_moment: Gradients { encoder: vec![], decoder: vec![] },
            second_moment: Gradients { encoder: vec![], decoder: vec![] },
            step: 0,
        };
        state.first_moment = Gradients::zeros_like(&state);
        state.second_moment = Gradients::zeros_like(&state);
        state
    }

    pub fn input_dim(&self) -> usize {
        self.encoder[0].in_dim()
    }

    pub fn embed_dim(&self) -> usize {
        self.encoder.last().expect("encoder has a layer").out_dim()
    }

    /// Adam steps taken so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn n_parameters(&self) -> usize {
        self.encoder
            .iter()
            .chain(&self.decoder)
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// Layers in parameter order with their block name prefixes.
    pub(crate) fn layers(&self) -> impl Iterator<Item = (String, &Dense)> {
        named(&self.encoder, "encoder").chain(named(&self.decoder, "decoder"))
    }

    pub(crate) fn check_dims(&self) -> Result<()> {
        for stack in [&self.encoder, &self.decoder] {
            for (a, b) in stack.iter().zip(stack.iter().skip(1)) {
                if a.out_dim() != b.in_dim() {
                    return Err(ShadeError::ShapeMismatch("layer dimensions do not chain".into()));
                }
            }
        }
        if self.decoder[0].in_dim() != self.embed_dim() || self.decoder.last().map(Dense::out_dim) != Some(self.input_dim()) {
            return Err(ShadeError::ShapeMismatch("decoder does not mirror the encoder".into()));
        }
        Ok(())
    }

    pub fn encode(&self, batch: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_input(batch, self.input_dim())?;
        Ok(run(&self.encoder, batch))
    }

    pub fn decode(&self, embedding: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        check_input(embedding, self.embed_dim())?;
        Ok(run(&self.decoder, embedding))
    }

    /// Writes a versioned JSON checkpoint with parameters, Adam moments and
    /// the step counter.
    pub fn save_checkpoint<W: Write>(&self, w: W) -> Result<()> {
        let dump = |layers: &[Dense], m: &[LayerGrad], v: &[LayerGrad]| {
            layers
                .iter()
                .zip(m)
                .zip(v)
                .map(|((l, m), v)| LayerDump {
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    activation: l.activation,
                    weight: l.weight.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                    m_weight: m.weight.iter().copied().collect(),
                    m_bias: m.bias.to_vec(),
                    v_weight: v.weight.iter().copied().collect(),
                    v_bias: v.bias.to_vec(),
                })
                .collect()
        };
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            step: self.step,
            encoder: dump(&self.encoder, &self.first_moment.encoder, &self.second_moment.encoder),
            decoder: dump(&self.decoder, &self.first_moment.decoder, &self.second_moment.decoder),
        };
        serde_json::to_writer(w, &ckpt)?;
        Ok(())
    }

    pub fn load_checkpoint<R: Read>(r: R) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_reader(r)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(ShadeError::invalid("checkpoint", format!("unsupported version {}", ckpt.version)));
        }
        let shape_err = |e: ndarray::ShapeError| ShadeError::ShapeMismatch(e.to_string());
        let load = |dumps: Vec<LayerDump>| -> Result<(Vec<Dense>, Vec<LayerGrad>, Vec<LayerGrad>)> {
            let mut layers = Vec::new();
            let mut ms = Vec::new();
            let mut vs = Vec::new();
            for d in dumps {
                let shape = (d.in_dim, d.out_dim);
                if [d.bias.len(), d.m_bias.len(), d.v_bias.len()].iter().any(|&l| l != d.out_dim) {
                    return Err(ShadeError::ShapeMismatch("bias length differs from out_dim".into()));
                }
                layers.push(Dense {
                    weight: Array2::from_shape_vec(shape, d.weight).map_err(shape_err)?,
                    bias: Array1::from(d.bias),
                    activation: d.activation,
                });
                ms.push(LayerGrad {
                    weight: Array2::from_shape_vec(shape, d.m_weight).map_err(shape_err)?,
                    bias: Array1::from(d.m_bias),
                });
                vs.push(LayerGrad {
                    weight: Array2::from_shape_vec(shape, d.v_weight).map_err(shape_err)?,
                    bias: Array1::from(d.v_bias),
                });
            }
            Ok((layers, ms, vs))
        };
        let (encoder, me, ve) = load(ckpt.encoder)?;
        let (decoder, md, vd) = load(ckpt.decoder)?;
        if encoder.is_empty() || decoder.is_empty() {
            return Err(ShadeError::invalid("checkpoint", "empty layer stack"));
        }
        let state = Self {
            encoder,
            decoder,
            first_moment: Gradients { encoder: me, decoder: md },
            second_moment: Gradients { encoder: ve, decoder: vd },
            step: ckpt.step,
        };
        state.check_dims()?;
        Ok(state)
    }
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    step: u64,
    encoder: Vec<LayerDump>,
    decoder: Vec<LayerDump>,
}

#[derive(Serialize, Deserialize)]
struct LayerDump {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    weight: Vec<f64>,
    bias: Vec<f64>,
    m_weight: Vec<f64>,
    m_bias: Vec<f64>,
    v_weight: Vec<f64>,
    v_bias: Vec<f64>,
}

fn check_input(x: ArrayView2<'_, f64>, dim: usize) -> Result<()> {
    if x.ncols() != dim {
        return Err(ShadeError::ShapeMismatch(format!("expected {dim} columns, got {}", x.ncols())));
    }
    check_finite(x)
}

fn run(layers: &[Dense], x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = layers[0].forward(x);
    for layer in &layers[1..] {
        out = layer.forward(out.view());
    }
    out
}
