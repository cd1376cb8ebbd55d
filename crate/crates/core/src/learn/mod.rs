//! From-scratch supervised learning: MLP and 1-D CNN classifiers/regressors,
//! linear and logistic regression, linear epsilon-SVR, with gradient checking
//! and binary model persistence.

pub mod net;
pub mod svr;

use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::binio::{BinError, CrcReader, CrcWriter};
use net::{backward, forward, layer_offsets, LayerDesc};

pub const MODEL_MAGIC: &str = "BDMODEL/1";

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("need at least 2 training rows, got {0}")]
    TooFewRows(usize),
    #[error("training diverged: loss became non-finite at epoch {epoch} (try a lower learning rate than {lr})")]
    Diverged { epoch: usize, lr: f64 },
    #[error("input row has length {got}, model expects {expected}")]
    InputLength { expected: usize, got: usize },
    #[error("target kind does not match model output")]
    TargetMismatch,
    #[error("model file error: {0}")]
    File(#[from] BinError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Mlp,
    Cnn1d,
    LinReg,
    LogReg,
    Svr,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mlp => "MLP",
            ModelKind::Cnn1d => "CNN",
            ModelKind::LinReg => "LINREG",
            ModelKind::LogReg => "LOGREG",
            ModelKind::Svr => "SVR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputKind {
    Binary,
    Multiclass(usize),
    Scalar,
}

impl OutputKind {
    pub fn dim(self) -> usize {
        match self {
            OutputKind::Binary | OutputKind::Scalar => 1,
            OutputKind::Multiclass(n) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    /// MLP hidden layer sizes.
    pub layer_sizes: Vec<usize>,
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub conv_stride: usize,
    pub output: OutputKind,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, input_dim: usize, output: OutputKind) -> Self {
        if let OutputKind::Multiclass(n) = output {
            assert!(n >= 2, "multiclass output needs at least 2 classes");
        }
        let spec = Self {
            kind,
            input_dim,
            layer_sizes: vec![32, 16],
            conv_filters: 16,
            conv_kernel: 2,
            conv_stride: 1,
            output,
        };
        if kind == ModelKind::Cnn1d {
            assert!(spec.conv_kernel <= input_dim, "conv kernel exceeds input length");
        }
        spec
    }

    pub fn layers(&self) -> Vec<LayerDesc> {
        let out_dim = self.output.dim();
        match self.kind {
            ModelKind::Mlp => {
                let mut layers = Vec::new();
                let mut prev = self.input_dim;
                for &h in &self.layer_sizes {
                    layers.push(LayerDesc::Dense { in_dim: prev, out_dim: h, relu: true });
                    prev = h;
                }
                layers.push(LayerDesc::Dense { in_dim: prev, out_dim, relu: false });
                layers
            }
            ModelKind::Cnn1d => {
                let conv = LayerDesc::Conv1d {
                    len_in: self.input_dim,
                    filters: self.conv_filters,
                    kernel: self.conv_kernel,
                    stride: self.conv_stride,
                };
                let flat = conv.out_len();
                vec![conv, LayerDesc::Dense { in_dim: flat, out_dim, relu: false }]
            }
            ModelKind::LinReg | ModelKind::LogReg | ModelKind::Svr => {
                vec![LayerDesc::Dense { in_dim: self.input_dim, out_dim, relu: false }]
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(LayerDesc::param_count).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub seed: u64,
    /// epsilon of the SVR loss tube.
    pub svr_epsilon: f64,
    /// L2 weight penalty for SVR.
    pub svr_lambda: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 64,
            learning_rate: 1e-3,
            optimizer: Optimizer::Adam,
            seed: 0,
            svr_epsilon: 0.1,
            svr_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Class(usize),
    Value(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainManifest {
    pub config_digest: String,
    pub data_digest: String,
    pub final_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub weights: Vec<f64>,
    pub manifest: TrainManifest,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Per-sample loss and gradient with respect to the network output.
fn loss_and_dout(
    spec: &ModelSpec,
    config: &TrainConfig,
    output: &[f64],
    target: Target,
) -> Result<(f64, Vec<f64>), LearnError> {
    match (spec.output, target) {
        (OutputKind::Binary, Target::Class(y)) => {
            let z = output[0];
            let p = sigmoid(z);
            let y = y as f64;
            // Numerically stable BCE on the logit.
            let loss = z.max(0.0) - z * y + (1.0 + (-z.abs()).exp()).ln();
            Ok((loss, vec![p - y]))
        }
        (OutputKind::Multiclass(n), Target::Class(y)) => {
            debug_assert!(y < n);
            let probs = softmax(output);
            let loss = -(probs[y].max(1e-300)).ln();
            let mut d = probs;
            d[y] -= 1.0;
            Ok((loss, d))
        }
        (OutputKind::Scalar, Target::Value(y)) => {
            if spec.kind == ModelKind::Svr {
                let r = output[0] - y;
                let eps = config.svr_epsilon;
                let loss = (r.abs() - eps).max(0.0);
                let d = if r.abs() <= eps { 0.0 } else { r.signum() };
                Ok((loss, vec![d]))
            } else {
                let r = output[0] - y;
                Ok((r * r, vec![2.0 * r]))
            }
        }
        _ => Err(LearnError::TargetMismatch),
    }
}

fn he_uniform_init(layers: &[LayerDesc], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let offsets = layer_offsets(layers);
    let mut params = vec![0.0; *offsets.last().unwrap()];
    for (li, layer) in layers.iter().enumerate() {
        let limit = (6.0 / layer.fan_in() as f64).sqrt();
        let weight_count = match *layer {
            LayerDesc::Dense { in_dim, out_dim, .. } => in_dim * out_dim,
            LayerDesc::Conv1d { filters, kernel, .. } => filters * kernel,
        };
        for w in params[offsets[li]..offsets[li] + weight_count].iter_mut() {
            *w = rng.gen_range(-limit..limit);
        }
        // Biases stay zero.
    }
    params
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(n: usize) -> Self {
        Self { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - Self::BETA1.powi(self.t as i32);
        let bc2 = 1.0 - Self::BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + Self::EPS);
        }
    }
}

/// Mean loss over `rows` plus its gradient, including the SVR L2 penalty.
fn batch_gradient(
    spec: &ModelSpec,
    config: &TrainConfig,
    layers: &[LayerDesc],
    offsets: &[usize],
    params: &[f64],
    rows: &[(Vec<f64>, Target)],
) -> Result<(f64, Vec<f64>), LearnError> {
    let mut grad = vec![0.0; params.len()];
    let mut loss_sum = 0.0;
    for (x, target) in rows {
        let acts = forward(layers, offsets, params, x);
        let (loss, d_out) = loss_and_dout(spec, config, acts.last().unwrap(), *target)?;
        loss_sum += loss;
        backward(layers, offsets, params, &acts, &d_out, &mut grad);
    }
    let n = rows.len() as f64;
    for g in grad.iter_mut() {
        *g /= n;
    }
    let mut loss = loss_sum / n;
    if spec.kind == ModelKind::Svr {
        // L2 on weights only (biases excluded).
        let lambda = config.svr_lambda;
        for (li, layer) in layers.iter().enumerate() {
            let weight_count = match *layer {
                LayerDesc::Dense { in_dim, out_dim, .. } => in_dim * out_dim,
                LayerDesc::Conv1d { filters, kernel, .. } => filters * kernel,
            };
            for i in offsets[li]..offsets[li] + weight_count {
                loss += 0.5 * lambda * params[i] * params[i];
                grad[i] += lambda * params[i];
            }
        }
    }
    Ok((loss, grad))
}

fn digest_config(spec: &ModelSpec, config: &TrainConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(spec).unwrap());
    hasher.update(serde_json::to_vec(config).unwrap());
    format!("{:x}", hasher.finalize())
}

fn digest_data(rows: &[(Vec<f64>, Target)]) -> String {
    let mut hasher = Sha256::new();
    for (x, t) in rows {
        for v in x {
            hasher.update(v.to_le_bytes());
        }
        match t {
            Target::Class(c) => hasher.update((*c as u64).to_le_bytes()),
            Target::Value(v) => hasher.update(v.to_le_bytes()),
        }
    }
    format!("{:x}", hasher.finalize())
}

pub fn train(
    spec: &ModelSpec,
    config: &TrainConfig,
    rows: &[(Vec<f64>, Target)],
) -> Result<TrainedModel, LearnError> {
    if rows.len() < 2 {
        return Err(LearnError::TooFewRows(rows.len()));
    }
    for (x, _) in rows {
        if x.len() != spec.input_dim {
            return Err(LearnError::InputLength { expected: spec.input_dim, got: x.len() });
        }
    }
    let layers = spec.layers();
    let offsets = layer_offsets(&layers);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = he_uniform_init(&layers, &mut rng);
    let mut adam = Adam::new(params.len());
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut final_loss = f64::NAN;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size.max(1)) {
            let batch: Vec<(Vec<f64>, Target)> =
                chunk.iter().map(|&i| rows[i].clone()).collect();
            let (loss, grad) =
                batch_gradient(spec, config, &layers, &offsets, &params, &batch)?;
            if !loss.is_finite() {
                return Err(LearnError::Diverged { epoch, lr: config.learning_rate });
            }
            match config.optimizer {
                Optimizer::Adam => adam.step(&mut params, &grad, config.learning_rate),
                Optimizer::Sgd => {
                    for (p, g) in params.iter_mut().zip(&grad) {
                        *p -= config.learning_rate * g;
                    }
                }
            }
            epoch_loss += loss;
            batches += 1;
        }
        final_loss = epoch_loss / batches as f64;
    }
    Ok(TrainedModel {
        spec: spec.clone(),
        weights: params,
        manifest: TrainManifest {
            config_digest: digest_config(spec, config),
            data_digest: digest_data(rows),
            final_loss,
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    /// Class probabilities; index = class id. Binary models report
    /// [P(class 0), P(class 1)].
    Distribution(Vec<f64>),
    /// Regression output clamped at >= 0 hours.
    Hours(f64),
}

impl Prediction {
    pub fn class(&self) -> Option<usize> {
        match self {
            Prediction::Distribution(p) => p
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                .map(|(i, _)| i),
            Prediction::Hours(_) => None,
        }
    }
}

pub fn predict(model: &TrainedModel, row: &[f64]) -> Result<Prediction, LearnError> {
    if row.len() != model.spec.input_dim {
        return Err(LearnError::InputLength { expected: model.spec.input_dim, got: row.len() });
    }
    let layers = model.spec.layers();
    let offsets = layer_offsets(&layers);
    let acts = forward(&layers, &offsets, &model.weights, row);
    let out = acts.last().unwrap();
    Ok(match model.spec.output {
        OutputKind::Binary => {
            let p = sigmoid(out[0]);
            Prediction::Distribution(vec![1.0 - p, p])
        }
        OutputKind::Multiclass(_) => Prediction::Distribution(softmax(out)),
        OutputKind::Scalar => Prediction::Hours(out[0].max(0.0)),
    })
}

/// Compares analytic gradients against central finite differences
/// (h = 1e-5) over every parameter of a small random instance of `spec`.
/// Returns the max relative error.
pub fn gradient_check(spec: &ModelSpec, seed: u64) -> f64 {
    let config = TrainConfig { seed, ..Default::default() };
    let layers = spec.layers();
    let offsets = layer_offsets(&layers);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
    let params = he_uniform_init(&layers, &mut rng);
    let make_batch = |rng: &mut ChaCha8Rng| -> Vec<(Vec<f64>, Target)> {
        (0..6)
            .map(|_| {
                let x: Vec<f64> =
                    (0..spec.input_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let t = match spec.output {
                    OutputKind::Binary => Target::Class(rng.gen_range(0..2)),
                    OutputKind::Multiclass(n) => Target::Class(rng.gen_range(0..n)),
                    OutputKind::Scalar => Target::Value(rng.gen_range(0.0..2.0)),
                };
                (x, t)
            })
            .collect()
    };
    let mut batch = make_batch(&mut rng);
    if spec.kind == ModelKind::Svr {
        // The epsilon-insensitive loss has a kink at |residual| = epsilon;
        // finite differences straddling it are meaningless, so redraw any
        // batch with a residual near the tube boundary.
        for _ in 0..100 {
            let clear = batch.iter().all(|(x, t)| {
                let Target::Value(y) = t else { return true };
                let out = net::forward(&layers, &offsets, &params, x);
                let r = out.last().unwrap()[0] - y;
                (r.abs() - config.svr_epsilon).abs() > 1e-3
            });
            if clear {
                break;
            }
            batch = make_batch(&mut rng);
        }
    }

    let (_, analytic) =
        batch_gradient(spec, &config, &layers, &offsets, &params, &batch).unwrap();
    let h = 1e-5;
    let mut max_rel = 0.0f64;
    let mut perturbed = params.clone();
    for i in 0..params.len() {
        perturbed[i] = params[i] + h;
        let (lp, _) =
            batch_gradient(spec, &config, &layers, &offsets, &perturbed, &batch).unwrap();
        perturbed[i] = params[i] - h;
        let (lm, _) =
            batch_gradient(spec, &config, &layers, &offsets, &perturbed, &batch).unwrap();
        perturbed[i] = params[i];
        let numeric = (lp - lm) / (2.0 * h);
        // The floor absorbs central-difference rounding noise (about
        // eps * loss / 2h, i.e. 1e-11 at unit loss) on zero-gradient
        // parameters.
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-6);
        max_rel = max_rel.max((analytic[i] - numeric).abs() / denom);
    }
    max_rel
}

impl TrainedModel {
    pub fn save(&self, path: &Path) -> Result<(), LearnError> {
        let file = std::fs::File::create(path)?;
        let mut w = CrcWriter::new(std::io::BufWriter::new(file));
        w.write_str(MODEL_MAGIC)?;
        w.write_str(&serde_json::to_string(&self.spec).expect("spec serializes"))?;
        w.write_f64_slice(&self.weights)?;
        w.write_str(&self.manifest.config_digest)?;
        w.write_str(&self.manifest.data_digest)?;
        w.write_f64(self.manifest.final_loss)?;
        let mut inner = w.finish()?;
        inner.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<TrainedModel, LearnError> {
        let file = std::fs::File::open(path)?;
        let mut r = CrcReader::new(std::io::BufReader::new(file))?;
        r.expect_magic(MODEL_MAGIC)?;
        let spec: ModelSpec = serde_json::from_str(&r.read_str()?)
            .map_err(|_| BinError::Utf8)?;
        let weights = r.read_f64_vec()?;
        let config_digest = r.read_str()?;
        let data_digest = r.read_str()?;
        let final_loss = r.read_f64()?;
        Ok(TrainedModel {
            spec,
            weights,
            manifest: TrainManifest { config_digest, data_digest, final_loss },
        })
    }
}
