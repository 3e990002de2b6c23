//! Feed-forward classifier: 15 inputs, one or two ReLU hidden layers, a
//! two-way softmax output, inverted dropout on hidden activations, exact
//! backpropagation of the cross-entropy loss, and Adam updates.
//!
//! Weights are stored row-major with shape `fan_out × fan_in`, so
//! `z[i] = Σ_j W[i * fan_in + j] · a[j] + b[i]`. Class 1 is "sarcastic".

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::NUM_FEATURES;
use crate::provenance::Provenance;
use crate::rng::{self, Rng};

pub const INPUT_DIM: usize = NUM_FEATURES;
pub const OUTPUT_DIM: usize = 2;
pub const MIN_HIDDEN: usize = 7;
pub const MAX_HIDDEN: usize = 15;

/// Probability floor inside the log of the cross-entropy.
pub const PROB_FLOOR: f64 = 1e-12;

pub const MODEL_FORMAT: &str = "sarcasm-mlp";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("trace does not match the model: {0}")]
    TraceMismatch(String),
    #[error("non-finite gradient at {0}")]
    NonFiniteGradient(String),
    #[error("learning rate must be positive and finite, got {0}")]
    InvalidLearningRate(f64),
    #[error("model file: {0}")]
    ModelFile(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    /// Probability that a hidden unit survives dropout during training.
    pub keep_prob: f64,
    pub seed: u64,
}

impl MlpConfig {
    pub fn new(hidden: Vec<usize>, keep_prob: f64, seed: u64) -> Self {
        MlpConfig {
            input_dim: INPUT_DIM,
            hidden,
            output_dim: OUTPUT_DIM,
            keep_prob,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        let bad = |msg: String| Err(NetworkError::InvalidConfig(msg));
        if self.input_dim != INPUT_DIM {
            return bad(format!(
                "input_dim must be {INPUT_DIM}, got {}",
                self.input_dim
            ));
        }
        if self.output_dim != OUTPUT_DIM {
            return bad(format!(
                "output_dim must be {OUTPUT_DIM}, got {}",
                self.output_dim
            ));
        }
        if self.hidden.is_empty() || self.hidden.len() > 2 {
            return bad(format!(
                "expected 1 or 2 hidden layers, got {}",
                self.hidden.len()
            ));
        }
        if let Some(w) = self
            .hidden
            .iter()
            .find(|w| !(MIN_HIDDEN..=MAX_HIDDEN).contains(*w))
        {
            return bad(format!(
                "hidden width {w} outside {MIN_HIDDEN}..={MAX_HIDDEN}"
            ));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return bad(format!(
                "keep_prob must be in (0, 1], got {}",
                self.keep_prob
            ));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` for every layer, input to output.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut widths = vec![self.input_dim];
        widths.extend(&self.hidden);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// One affine layer. Also used as the container for gradients and Adam moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Layer {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            bias: vec![0.0; fan_out],
        }
    }

    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.fan_in + col]
    }

    fn affine(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.fan_in)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>() + b)
            .collect()
    }

    fn same_shape(&self, other: &Layer) -> bool {
        self.fan_in == other.fan_in
            && self.fan_out == other.fan_out
            && self.weights.len() == other.weights.len()
            && self.bias.len() == other.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub config: MlpConfig,
    pub layers: Vec<Layer>,
}

/// Forward-pass mode. Training needs a generator for the dropout masks.
pub enum Mode<'a> {
    Train(&'a mut Rng),
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    /// Pre-activations per layer.
    pub pre: Vec<Vec<f64>>,
    /// Hidden activations after ReLU and (in training) the dropout mask.
    pub hidden: Vec<Vec<f64>>,
    /// Dropout masks per hidden layer; `None` in infer mode.
    pub masks: Option<Vec<Vec<f64>>>,
    pub probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(model: &MlpModel) -> Self {
        Gradients {
            layers: model
                .layers
                .iter()
                .map(|l| Layer::zeros(l.fan_in, l.fan_out))
                .collect(),
        }
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &Gradients) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights
                .iter_mut()
                .zip(&b.weights)
                .for_each(|(x, y)| *x += y);
            a.bias.iter_mut().zip(&b.bias).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|x| *x *= factor);
            l.bias.iter_mut().for_each(|x| *x *= factor);
        }
    }
}

/// Numerically stable softmax (the maximum logit is subtracted first).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln(max(p[y], 1e-12))`.
pub fn cross_entropy(probs: &[f64], class: usize) -> f64 {
    -probs[class].max(PROB_FLOOR).ln()
}

pub fn init_model(config: &MlpConfig) -> Result<MlpModel, NetworkError> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed);
    let layers = config
        .layer_dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let mut layer = Layer::zeros(fan_in, fan_out);
            for w in &mut layer.weights {
                *w = rng.gen_range(-limit..=limit);
            }
            layer
        })
        .collect();
    Ok(MlpModel {
        config: config.clone(),
        layers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub sarcastic: bool,
    /// Probability of the predicted class, in `[0.5, 1]`.
    pub confidence: f64,
}

impl Prediction {
    pub fn class(&self) -> usize {
        usize::from(self.sarcastic)
    }

    /// Argmax over two probabilities; ties go to class 0.
    pub fn from_probs(probs: &[f64]) -> Self {
        let sarcastic = probs[1] > probs[0];
        Prediction {
            sarcastic,
            confidence: if sarcastic { probs[1] } else { probs[0] },
        }
    }
}

impl MlpModel {
    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    pub fn forward(&self, x: &[f64], mode: Mode<'_>) -> Result<ForwardTrace, NetworkError> {
        if x.len() != self.config.input_dim {
            return Err(NetworkError::Dimension {
                expected: self.config.input_dim,
                got: x.len(),
            });
        }
        let keep = self.config.keep_prob;
        let mut rng = match mode {
            Mode::Train(rng) => Some(rng),
            Mode::Infer => None,
        };
        let mut masks = rng.as_ref().map(|_| Vec::new());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() - 1);
        let last = self.layers.len() - 1;

        for (l, layer) in self.layers.iter().enumerate() {
            let input = if l == 0 { x } else { &hidden[l - 1] };
            let z = layer.affine(input);
            if l < last {
                let mut a: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
                if let (Some(rng), Some(masks)) = (rng.as_mut(), masks.as_mut()) {
                    let mask: Vec<f64> = (0..a.len())
                        .map(|_| {
                            if rng.gen::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    a.iter_mut().zip(&mask).for_each(|(v, m)| *v *= m);
                    masks.push(mask);
                }
                hidden.push(a);
            }
            pre.push(z);
        }
        let probs = softmax(&pre[last]);
        Ok(ForwardTrace {
            input: x.to_vec(),
            pre,
            hidden,
            masks,
            probs,
        })
    }

    /// Gradients of `cross_entropy(forward(x), class)` for every parameter.
    pub fn backward(&self, trace: &ForwardTrace, class: usize) -> Result<Gradients, NetworkError> {
        self.check_trace(trace)?;
        if class >= self.config.output_dim {
            return Err(NetworkError::TraceMismatch(format!(
                "class {class} out of range"
            )));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut delta: Vec<f64> = trace.probs.clone();
        delta[class] -= 1.0;

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = if l == 0 {
                &trace.input
            } else {
                &trace.hidden[l - 1]
            };
            let g = &mut grads.layers[l];
            for (i, d) in delta.iter().enumerate() {
                let row = &mut g.weights[i * layer.fan_in..(i + 1) * layer.fan_in];
                row.iter_mut().zip(input).for_each(|(gw, a)| *gw = d * a);
                g.bias[i] = *d;
            }
            if l == 0 {
                break;
            }
            let z_below = &trace.pre[l - 1];
            let mask = trace.masks.as_ref().map(|m| &m[l - 1]);
            delta = (0..layer.fan_in)
                .map(|j| {
                    if z_below[j] <= 0.0 {
                        return 0.0;
                    }
                    let back: f64 = delta
                        .iter()
                        .enumerate()
                        .map(|(i, d)| d * layer.weight(i, j))
                        .sum();
                    back * mask.map_or(1.0, |m| m[j])
                })
                .collect();
        }
        Ok(grads)
    }

    fn check_trace(&self, trace: &ForwardTrace) -> Result<(), NetworkError> {
        let mismatch = |what: &str| Err(NetworkError::TraceMismatch(what.to_owned()));
        if trace.pre.len() != self.layers.len() || trace.hidden.len() + 1 != self.layers.len() {
            return mismatch("layer count");
        }
        if trace.input.len() != self.config.input_dim {
            return mismatch("input width");
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if trace.pre[l].len() != layer.fan_out {
                return mismatch("pre-activation width");
            }
            if l + 1 < self.layers.len() && trace.hidden[l].len() != layer.fan_out {
                return mismatch("hidden width");
            }
        }
        if let Some(masks) = &trace.masks {
            if masks.len() != trace.hidden.len()
                || masks
                    .iter()
                    .zip(&trace.hidden)
                    .any(|(m, h)| m.len() != h.len())
            {
                return mismatch("dropout masks");
            }
        }
        if trace.probs.len() != self.config.output_dim {
            return mismatch("output width");
        }
        Ok(())
    }

    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>, NetworkError> {
        Ok(self.forward(x, Mode::Infer)?.probs)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction, NetworkError> {
        Ok(Prediction::from_probs(&self.probabilities(x)?))
    }

    pub fn to_json(&self, provenance: Option<&Provenance>) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_owned(),
            version: MODEL_VERSION,
            config: self.config.clone(),
            layers: self.layers.clone(),
            provenance: provenance.cloned(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<(MlpModel, Option<Provenance>), NetworkError> {
        let err = |m: String| NetworkError::ModelFile(m);
        let file: ModelFile = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(err(format!("unknown format {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(err(format!(
                "unsupported version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        file.config.validate()?;
        let dims = file.config.layer_dims();
        if dims.len() != file.layers.len() {
            return Err(err(format!(
                "config implies {} layers, file has {}",
                dims.len(),
                file.layers.len()
            )));
        }
        for (l, ((fan_in, fan_out), layer)) in dims.iter().zip(&file.layers).enumerate() {
            if !layer.same_shape(&Layer::zeros(*fan_in, *fan_out)) {
                return Err(err(format!(
                    "layer {l} shape mismatch: expected {fan_out}x{fan_in}"
                )));
            }
            if layer
                .weights
                .iter()
                .chain(&layer.bias)
                .any(|v| !v.is_finite())
            {
                return Err(err(format!("layer {l} has non-finite values")));
            }
        }
        Ok((
            MlpModel {
                config: file.config,
                layers: file.layers,
            },
            file.provenance,
        ))
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: MlpConfig,
    layers: Vec<Layer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Gradients,
    pub v: Gradients,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(model: &MlpModel) -> Self {
        AdamState {
            m: Gradients::zeros_like(model),
            v: Gradients::zeros_like(model),
            t: 0,
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            epsilon: ADAM_EPSILON,
        }
    }
}

fn adam_update(param: &mut f64, m: &mut f64, v: &mut f64, g: f64, s: &AdamCoefficients) {
    *m = s.beta1 * *m + (1.0 - s.beta1) * g;
    *v = s.beta2 * *v + (1.0 - s.beta2) * g * g;
    let m_hat = *m / s.correction1;
    let v_hat = *v / s.correction2;
    *param -= s.lr * m_hat / (v_hat.sqrt() + s.epsilon);
}

struct AdamCoefficients {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    correction1: f64,
    correction2: f64,
}

/// One bias-corrected Adam update of every parameter. The gradients are
/// checked before anything is touched, so an error leaves model and state
/// unchanged.
pub fn adam_step(
    model: &mut MlpModel,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
) -> Result<(), NetworkError> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(NetworkError::InvalidLearningRate(lr));
    }
    let shapes_agree = grads.layers.len() == model.layers.len()
        && state.m.layers.len() == model.layers.len()
        && state.v.layers.len() == model.layers.len()
        && model.layers.iter().enumerate().all(|(l, p)| {
            p.same_shape(&grads.layers[l])
                && p.same_shape(&state.m.layers[l])
                && p.same_shape(&state.v.layers[l])
        });
    if !shapes_agree {
        return Err(NetworkError::TraceMismatch(
            "gradient or optimizer state shape differs from the model".to_owned(),
        ));
    }
    for (l, g) in grads.layers.iter().enumerate() {
        if let Some(k) = g.weights.iter().position(|v| !v.is_finite()) {
            let (row, col) = (k / g.fan_in, k % g.fan_in);
            return Err(NetworkError::NonFiniteGradient(format!(
                "layers[{l}].weights[{row},{col}]"
            )));
        }
        if let Some(k) = g.bias.iter().position(|v| !v.is_finite()) {
            return Err(NetworkError::NonFiniteGradient(format!(
                "layers[{l}].bias[{k}]"
            )));
        }
    }

    state.t += 1;
    let t = state.t as i32;
    let coeff = AdamCoefficients {
        lr,
        beta1: state.beta1,
        beta2: state.beta2,
        epsilon: state.epsilon,
        correction1: 1.0 - state.beta1.powi(t),
        correction2: 1.0 - state.beta2.powi(t),
    };
    for (l, layer) in model.layers.iter_mut().enumerate() {
        let (g, m, v) = (
            &grads.layers[l],
            &mut state.m.layers[l],
            &mut state.v.layers[l],
        );
        for k in 0..layer.weights.len() {
            adam_update(
                &mut layer.weights[k],
                &mut m.weights[k],
                &mut v.weights[k],
                g.weights[k],
                &coeff,
            );
        }
        for k in 0..layer.bias.len() {
            adam_update(
                &mut layer.bias[k],
                &mut m.bias[k],
                &mut v.bias[k],
                g.bias[k],
                &coeff,
            );
        }
    }
    Ok(())
}
