//! Dense feed-forward encoder and softmax classifier with exact reverse-mode
//! gradients and an Adam optimizer.
//!
//! A model is the composition of an encoder (input -> hidden layers ->
//! embedding, activation after every layer) and a single dense classifier
//! layer (embedding -> class logits, softmax applied separately). The
//! embedding space is the activation of the final encoder layer, just before
//! the classifier.
//!
//! Everything is `f64` and deterministic: same inputs, same bits.

mod objective;

pub use objective::{
    compute_objective_and_gradients, objective_value, ObjectiveBatch, ObjectiveSpec, TermValues,
};

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Probabilities are clamped at this floor before taking logs.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Relu => a.max(0.0),
            Activation::Tanh => a.tanh(),
        }
    }

    /// Derivative expressed in terms of the pre-activation.
    fn derivative(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = a.tanh();
                1.0 - t * t
            }
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation '{other}'"))),
        }
    }
}

/// Network shape: encoder `input_dim -> hidden_dims... -> embedding_dim`,
/// classifier `embedding_dim -> num_classes`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub embedding_dim: usize,
    pub num_classes: usize,
    pub activation: Activation,
}

impl ArchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.embedding_dim == 0 {
            return Err(Error::Config("all dimensions must be >= 1".into()));
        }
        if self.hidden_dims.iter().any(|&h| h == 0) {
            return Err(Error::Config("hidden dimensions must be >= 1".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {}",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Per-layer `(fan_in, fan_out)` pairs, encoder layers then classifier.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        let mut prev = self.input_dim;
        for &h in &self.hidden_dims {
            dims.push((prev, h));
            prev = h;
        }
        dims.push((prev, self.embedding_dim));
        dims.push((self.embedding_dim, self.num_classes));
        dims
    }

    /// Number of encoder layers (the classifier is one more).
    pub fn encoder_layers(&self) -> usize {
        self.hidden_dims.len() + 1
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// One dense layer's parameters (or a same-shaped gradient/moment block).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    /// fan_in x fan_out weight matrix.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl ParamBlock {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self { w: Array2::zeros((fan_in, fan_out)), b: Array1::zeros(fan_out) }
    }

    fn zeros_like(other: &ParamBlock) -> Self {
        Self::zeros(other.w.nrows(), other.w.ncols())
    }
}

/// All trainable parameters: encoder blocks followed by the classifier block.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: ArchSpec,
    pub blocks: Vec<ParamBlock>,
    /// Seed the model was initialized from, kept for the checkpoint.
    pub seed: u64,
}

impl ModelParams {
    pub fn embedding_dim(&self) -> usize {
        self.arch.embedding_dim
    }

    pub fn num_classes(&self) -> usize {
        self.arch.num_classes
    }

    fn classifier(&self) -> &ParamBlock {
        self.blocks.last().expect("model has at least one block")
    }

    pub fn assert_finite(&self) -> Result<()> {
        for (i, blk) in self.blocks.iter().enumerate() {
            if blk.w.iter().chain(blk.b.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Numerical(format!("non-finite parameter in block {i}")));
            }
        }
        Ok(())
    }
}

/// Gradient of a scalar objective with respect to every parameter entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<ParamBlock>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self { blocks: params.blocks.iter().map(ParamBlock::zeros_like).collect() }
    }

    pub fn iter_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().flat_map(|b| b.w.iter().chain(b.b.iter()).copied())
    }
}

/// Initialize a model: weights uniform in `(-1/sqrt(fan_in), 1/sqrt(fan_in))`,
/// biases zero. Deterministic per seed.
pub fn init_model(arch: &ArchSpec, seed: u64) -> Result<ModelParams> {
    arch.validate()?;
    let mut rng = rng::chacha(seed);
    let blocks = arch
        .layer_dims()
        .into_iter()
        .map(|(fan_in, fan_out)| {
            let scale = 1.0 / (fan_in as f64).sqrt();
            let w =
                Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-1.0..1.0) * scale);
            ParamBlock { w, b: Array1::zeros(fan_out) }
        })
        .collect();
    Ok(ModelParams { arch: arch.clone(), blocks, seed })
}

/// Encoder forward pass with cached pre-activations, for backprop.
pub(crate) struct EncoderTrace {
    /// Layer inputs: `zs[0]` is the batch, `zs[i+1] = act(pre[i])`; the last
    /// entry is the embedding.
    pub zs: Vec<Array2<f64>>,
    pub pre: Vec<Array2<f64>>,
}

impl EncoderTrace {
    pub fn embedding(&self) -> &Array2<f64> {
        self.zs.last().expect("trace has at least the input")
    }
}

pub(crate) fn forward_encoder_trace(
    params: &ModelParams,
    x: ArrayView2<f64>,
) -> Result<EncoderTrace> {
    if x.ncols() != params.arch.input_dim {
        return Err(Error::Input(format!(
            "encoder expects {} input columns, got {}",
            params.arch.input_dim,
            x.ncols()
        )));
    }
    let act = params.arch.activation;
    let mut zs = vec![x.to_owned()];
    let mut pre = Vec::with_capacity(params.arch.encoder_layers());
    for blk in &params.blocks[..params.arch.encoder_layers()] {
        let a = zs.last().unwrap().dot(&blk.w) + &blk.b;
        let z = a.mapv(|v| act.apply(v));
        pre.push(a);
        zs.push(z);
    }
    Ok(EncoderTrace { zs, pre })
}

/// Backpropagate an embedding gradient through the encoder, accumulating
/// parameter gradients into `grads`.
pub(crate) fn encoder_backward(
    params: &ModelParams,
    trace: &EncoderTrace,
    g_embedding: &Array2<f64>,
    grads: &mut Gradients,
) {
    let act = params.arch.activation;
    let mut g_z = g_embedding.clone();
    for i in (0..params.arch.encoder_layers()).rev() {
        let g_a = &g_z * &trace.pre[i].mapv(|v| act.derivative(v));
        grads.blocks[i].w += &trace.zs[i].t().dot(&g_a);
        grads.blocks[i].b += &g_a.sum_axis(Axis(0));
        if i > 0 {
            g_z = g_a.dot(&params.blocks[i].w.t());
        }
    }
}

/// Map a batch into the embedding space.
pub fn forward_encoder(params: &ModelParams, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let trace = forward_encoder_trace(params, x)?;
    Ok(trace.zs.into_iter().next_back().unwrap())
}

pub(crate) fn classifier_logits(params: &ModelParams, z: ArrayView2<f64>) -> Result<Array2<f64>> {
    if z.ncols() != params.arch.embedding_dim {
        return Err(Error::Input(format!(
            "classifier expects {} embedding columns, got {}",
            params.arch.embedding_dim,
            z.ncols()
        )));
    }
    let blk = params.classifier();
    Ok(z.dot(&blk.w) + &blk.b)
}

/// Row-wise softmax with max-subtraction.
pub(crate) fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum: f64 = row.iter().sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Class probabilities for embedded points.
pub fn forward_classifier(params: &ModelParams, z: ArrayView2<f64>) -> Result<Array2<f64>> {
    Ok(softmax(&classifier_logits(params, z)?))
}

/// End-to-end class probabilities for raw inputs.
pub fn predict_probs(params: &ModelParams, x: ArrayView2<f64>) -> Result<Array2<f64>> {
    let z = forward_encoder(params, x)?;
    forward_classifier(params, z.view())
}

/// Index of the largest entry per row; ties go to the lower index.
pub fn argmax_rows(probs: &Array2<f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Mean negative log-probability of the true class, probabilities clamped
/// below at [`PROB_CLAMP`].
pub fn cross_entropy(probs: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    if probs.nrows() != labels.len() {
        return Err(Error::Input(format!(
            "got {} probability rows for {} labels",
            probs.nrows(),
            labels.len()
        )));
    }
    let k = probs.ncols();
    let mut total = 0.0;
    for (row, &y) in probs.rows().into_iter().zip(labels) {
        if y >= k {
            return Err(Error::Input(format!("label {y} out of range for {k} classes")));
        }
        total += -row[y].max(PROB_CLAMP).ln();
    }
    Ok(total / labels.len() as f64)
}

/// Gradient of `weight * cross_entropy(softmax(logits), labels)` with respect
/// to the logits. Rows whose true-class probability hit the clamp contribute
/// zero (the clamped loss is locally constant there).
pub(crate) fn ce_grad_logits(probs: &Array2<f64>, labels: &[usize], weight: f64) -> Array2<f64> {
    let n = labels.len() as f64;
    let mut g = Array2::<f64>::zeros(probs.dim());
    for (i, &y) in labels.iter().enumerate() {
        if probs[[i, y]] < PROB_CLAMP {
            continue;
        }
        for j in 0..probs.ncols() {
            let delta = if j == y { 1.0 } else { 0.0 };
            g[[i, j]] = weight * (probs[[i, j]] - delta) / n;
        }
    }
    g
}

/// Adam accumulator state. Moments mirror the parameter blocks.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    m: Vec<ParamBlock>,
    v: Vec<ParamBlock>,
    pub step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub fn new(
        params: &ModelParams,
        learning_rate: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    ) -> Self {
        let m = params.blocks.iter().map(ParamBlock::zeros_like).collect();
        let v = params.blocks.iter().map(ParamBlock::zeros_like).collect();
        Self { m, v, step: 0, learning_rate, beta1, beta2, epsilon }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut OptimizerState,
) -> Result<()> {
    if grads.blocks.len() != params.blocks.len() {
        return Err(Error::Input("gradient block count does not match parameters".into()));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    let (b1, b2) = (state.beta1, state.beta2);
    let (lr, eps) = (state.learning_rate, state.epsilon);
    for i in 0..params.blocks.len() {
        let g = &grads.blocks[i];
        let p = &mut params.blocks[i];
        if g.w.dim() != p.w.dim() || g.b.dim() != p.b.dim() {
            return Err(Error::Input(format!("gradient shape mismatch in block {i}")));
        }
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        Zip::from(&mut m.w).and(&g.w).for_each(|m, &g| *m = b1 * *m + (1.0 - b1) * g);
        Zip::from(&mut v.w).and(&g.w).for_each(|v, &g| *v = b2 * *v + (1.0 - b2) * g * g);
        Zip::from(&mut p.w).and(&m.w).and(&v.w).for_each(|w, &m, &v| {
            *w -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
        });
        Zip::from(&mut m.b).and(&g.b).for_each(|m, &g| *m = b1 * *m + (1.0 - b1) * g);
        Zip::from(&mut v.b).and(&g.b).for_each(|v, &g| *v = b2 * *v + (1.0 - b2) * g * g);
        Zip::from(&mut p.b).and(&m.b).and(&v.b).for_each(|b, &m, &v| {
            *b -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
        });
    }
    Ok(())
}

// --- checkpoint file -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct BlockFile {
    rows: usize,
    cols: usize,
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    seed: u64,
    arch: ArchSpec,
    blocks: Vec<BlockFile>,
}

/// Write a model checkpoint: the architecture plus every parameter block as
/// flat decimal arrays. Values round-trip bit-exactly.
pub fn save_checkpoint(params: &ModelParams, path: impl AsRef<Path>) -> Result<()> {
    let file = CheckpointFile {
        seed: params.seed,
        arch: params.arch.clone(),
        blocks: params
            .blocks
            .iter()
            .map(|blk| BlockFile {
                rows: blk.w.nrows(),
                cols: blk.w.ncols(),
                w: blk.w.iter().copied().collect(),
                b: blk.b.to_vec(),
            })
            .collect(),
    };
    let text = toml::to_string(&file)
        .map_err(|e| Error::Format(format!("cannot serialize checkpoint: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Read a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelParams> {
    let text = std::fs::read_to_string(&path)?;
    let file: CheckpointFile =
        toml::from_str(&text).map_err(|e| Error::Format(format!("bad checkpoint: {e}")))?;
    file.arch.validate()?;
    let dims = file.arch.layer_dims();
    if file.blocks.len() != dims.len() {
        return Err(Error::Format(format!(
            "checkpoint has {} blocks, architecture needs {}",
            file.blocks.len(),
            dims.len()
        )));
    }
    let mut blocks = Vec::with_capacity(dims.len());
    for (i, (blk, (fan_in, fan_out))) in file.blocks.into_iter().zip(dims).enumerate() {
        if blk.rows != fan_in
            || blk.cols != fan_out
            || blk.w.len() != fan_in * fan_out
            || blk.b.len() != fan_out
        {
            return Err(Error::Format(format!("checkpoint block {i} has inconsistent shape")));
        }
        let w = Array2::from_shape_vec((fan_in, fan_out), blk.w)
            .map_err(|e| Error::Format(format!("checkpoint block {i}: {e}")))?;
        blocks.push(ParamBlock { w, b: Array1::from_vec(blk.b) });
    }
    let params = ModelParams { arch: file.arch, blocks, seed: file.seed };
    params.assert_finite()?;
    Ok(params)
}
