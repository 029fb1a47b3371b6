//! Dense prediction head trained on fixed backbone features.
//!
//! Topology is `F -> 256 (ReLU) -> 128 (ReLU) -> 5 (softmax)`. Parameters are
//! stored in one flat buffer in the order `W1, b1, W2, b2, W3, b3`, with each
//! weight matrix row-major as `(out_dim, in_dim)`. Gradients and Adam moments
//! use the same layout, so the optimizer works on plain slices.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{FeatureDataset, FeatureRow};
use crate::flops::HEAD_WIDTHS;
use crate::grasp::{GraspDistribution, NUM_GRASPS};
use crate::metrics::{cross_entropy_raw, mean_angular_similarity, Loss, Similarity, LOG_EPS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HeadError {
    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("input contains non-finite values")]
    InvalidInput,
    #[error("batch is empty")]
    EmptyBatch,
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Shape of one dense layer inside the flat parameter buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Offset of the weight matrix; biases follow immediately after it.
    pub offset: usize,
}

impl LayerShape {
    pub fn weight_len(&self) -> usize {
        self.in_dim * self.out_dim
    }

    pub fn bias_offset(&self) -> usize {
        self.offset + self.weight_len()
    }

    pub fn end(&self) -> usize {
        self.bias_offset() + self.out_dim
    }
}

/// Layer shapes for feature dimension `feature_dim`.
pub fn layer_shapes(feature_dim: usize) -> [LayerShape; 3] {
    let dims = [feature_dim, HEAD_WIDTHS[0], HEAD_WIDTHS[1], HEAD_WIDTHS[2]];
    let mut offset = 0;
    core::array::from_fn(|l| {
        let s = LayerShape { in_dim: dims[l], out_dim: dims[l + 1], offset };
        offset = s.end();
        s
    })
}

pub fn param_count(feature_dim: usize) -> usize {
    layer_shapes(feature_dim)[2].end()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseHead {
    feature_dim: usize,
    params: Vec<f64>,
}

impl DenseHead {
    /// All-zero head; its output is uniform for any input.
    pub fn zeros(feature_dim: usize) -> Self {
        Self { feature_dim, params: vec![0.0; param_count(feature_dim)] }
    }

    pub fn from_params(feature_dim: usize, params: Vec<f64>) -> Result<Self, HeadError> {
        let expected = param_count(feature_dim);
        if feature_dim == 0 || params.len() != expected {
            return Err(HeadError::ShapeMismatch { expected, actual: params.len() });
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(HeadError::InvalidInput);
        }
        Ok(Self { feature_dim, params })
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Layer widths `[F, 256, 128, 5]`.
    pub fn dims(&self) -> [usize; 4] {
        [self.feature_dim, HEAD_WIDTHS[0], HEAD_WIDTHS[1], HEAD_WIDTHS[2]]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn shapes(&self) -> [LayerShape; 3] {
        layer_shapes(self.feature_dim)
    }

    pub fn weights(&self, layer: usize) -> &[f64] {
        let s = self.shapes()[layer];
        &self.params[s.offset..s.bias_offset()]
    }

    pub fn biases(&self, layer: usize) -> &[f64] {
        let s = self.shapes()[layer];
        &self.params[s.bias_offset()..s.end()]
    }

    pub fn biases_mut(&mut self, layer: usize) -> &mut [f64] {
        let s = self.shapes()[layer];
        &mut self.params[s.bias_offset()..s.end()]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let s = self.shapes()[layer];
        &mut self.params[s.offset..s.bias_offset()]
    }
}

/// Xavier-uniform initialization: weights from `U(-b, b)` with
/// `b = sqrt(6 / (fan_in + fan_out))`, biases zero.
pub fn xavier_init(feature_dim: usize, seed: u64) -> DenseHead {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    xavier_init_with(feature_dim, &mut rng)
}

fn xavier_init_with<R: Rng>(feature_dim: usize, rng: &mut R) -> DenseHead {
    let mut head = DenseHead::zeros(feature_dim);
    for s in head.shapes() {
        let bound = libm::sqrt(6.0 / (s.in_dim + s.out_dim) as f64);
        for w in &mut head.params[s.offset..s.bias_offset()] {
            *w = rng.random_range(-bound..=bound);
        }
    }
    head
}

/// Intermediate activations kept for backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub hidden1_pre: Vec<f64>,
    pub hidden1: Vec<f64>,
    pub hidden2_pre: Vec<f64>,
    pub hidden2: Vec<f64>,
    pub logits: [f64; NUM_GRASPS],
    pub output: GraspDistribution,
}

fn affine(weights: &[f64], biases: &[f64], x: &[f64], out: &mut [f64]) {
    let in_dim = x.len();
    for (o, (row, &b)) in out.iter_mut().zip(weights.chunks_exact(in_dim).zip(biases)) {
        *o = b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
    }
}

fn relu(pre: &[f64]) -> Vec<f64> {
    pre.iter().map(|&v| v.max(0.0)).collect()
}

/// Numerically stable softmax over five logits.
pub fn softmax(logits: &[f64; NUM_GRASPS]) -> GraspDistribution {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut p = logits.map(|z| libm::exp(z - max));
    let sum: f64 = p.iter().sum();
    for v in &mut p {
        *v /= sum;
    }
    GraspDistribution::from_array_unchecked(p)
}

impl DenseHead {
    fn check_input(&self, x: &[f64]) -> Result<(), HeadError> {
        if x.len() != self.feature_dim {
            return Err(HeadError::ShapeMismatch { expected: self.feature_dim, actual: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(HeadError::InvalidInput);
        }
        Ok(())
    }

    /// Runs the head on one feature vector, keeping intermediates.
    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache, HeadError> {
        self.check_input(x)?;
        let [h1, h2, _] = HEAD_WIDTHS;
        let mut hidden1_pre = vec![0.0; h1];
        affine(self.weights(0), self.biases(0), x, &mut hidden1_pre);
        let hidden1 = relu(&hidden1_pre);
        let mut hidden2_pre = vec![0.0; h2];
        affine(self.weights(1), self.biases(1), &hidden1, &mut hidden2_pre);
        let hidden2 = relu(&hidden2_pre);
        let mut logits = [0.0; NUM_GRASPS];
        affine(self.weights(2), self.biases(2), &hidden2, &mut logits);
        let output = softmax(&logits);
        Ok(ForwardCache { hidden1_pre, hidden1, hidden2_pre, hidden2, logits, output })
    }

    pub fn forward(&self, x: &[f64]) -> Result<GraspDistribution, HeadError> {
        Ok(self.forward_cached(x)?.output)
    }
}

/// Gradient of the mean loss with respect to every parameter, laid out like
/// [`DenseHead::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
}

/// `dL/dlogit` for one sample of the clamped per-category cross-entropy.
///
/// With `g_i = dL/dp_i`, the softmax Jacobian gives
/// `dL/dz_j = p_j g_j - p_j sum_i p_i g_i`. The products `p_i g_i` are formed
/// directly as `-(y_i - (1 - y_i) p_i / (1 - p_i)) / 5` so that tiny
/// probabilities do not blow up. Entries held at the clamp bound contribute
/// nothing because the clamp is flat there.
fn logit_gradient(p: &[f64; NUM_GRASPS], y: &[f64; NUM_GRASPS]) -> [f64; NUM_GRASPS] {
    let n = NUM_GRASPS as f64;
    let pg: [f64; NUM_GRASPS] = core::array::from_fn(|i| {
        let pi = p[i];
        if pi > LOG_EPS && pi < 1.0 - LOG_EPS {
            -(y[i] - (1.0 - y[i]) * pi / (1.0 - pi)) / n
        } else {
            0.0
        }
    });
    let total: f64 = pg.iter().sum();
    core::array::from_fn(|j| pg[j] - p[j] * total)
}

impl DenseHead {
    /// Accumulates one sample's gradient into `grad` and returns its loss.
    fn accumulate(&self, x: &[f64], y: &GraspDistribution, grad: &mut [f64]) -> Result<f64, HeadError> {
        let cache = self.forward_cached(x)?;
        let p = cache.output.as_array();
        let loss = cross_entropy_raw(p, y.as_array());
        let [s1, s2, s3] = self.shapes();

        let d_logits = logit_gradient(p, y.as_array());
        let d_hidden2 = backprop_dense(self, 2, s3, &d_logits, &cache.hidden2, &cache.hidden2_pre, grad);
        let d_hidden1 = backprop_dense(self, 1, s2, &d_hidden2, &cache.hidden1, &cache.hidden1_pre, grad);

        // First layer: no input gradient needed.
        let (gw, gb) = grad[s1.offset..s1.end()].split_at_mut(s1.weight_len());
        for (o, &d) in d_hidden1.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            gb[o] += d;
            for (g, &v) in gw[o * s1.in_dim..(o + 1) * s1.in_dim].iter_mut().zip(x) {
                *g += d * v;
            }
        }
        Ok(loss)
    }
}

/// Adds the weight/bias gradients of `layer` and returns the gradient with
/// respect to its input pre-activations (ReLU mask applied).
fn backprop_dense(
    head: &DenseHead,
    layer: usize,
    shape: LayerShape,
    d_out: &[f64],
    input: &[f64],
    input_pre: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    let weights = head.weights(layer);
    let (gw, gb) = grad[shape.offset..shape.end()].split_at_mut(shape.weight_len());
    let mut d_in = vec![0.0; shape.in_dim];
    for (o, &d) in d_out.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        gb[o] += d;
        let row = o * shape.in_dim..(o + 1) * shape.in_dim;
        for ((g, &v), (di, &w)) in gw[row.clone()].iter_mut().zip(input).zip(d_in.iter_mut().zip(&weights[row])) {
            *g += d * v;
            *di += d * w;
        }
    }
    for (di, &pre) in d_in.iter_mut().zip(input_pre) {
        if pre <= 0.0 {
            *di = 0.0;
        }
    }
    d_in
}

/// Batch-mean loss and its analytic gradient.
pub fn loss_and_gradients(
    head: &DenseHead,
    batch: &[(&[f64], &GraspDistribution)],
) -> Result<(Loss, Gradients), HeadError> {
    if batch.is_empty() {
        return Err(HeadError::EmptyBatch);
    }
    let mut grad = vec![0.0; head.params.len()];
    let mut loss = 0.0;
    for (x, y) in batch {
        loss += head.accumulate(x, y, &mut grad)?;
    }
    let scale = 1.0 / batch.len() as f64;
    for g in &mut grad {
        *g *= scale;
    }
    Ok((Loss::new(loss * scale), Gradients { values: grad }))
}

/// Batch-mean loss without gradients.
pub fn batch_loss(head: &DenseHead, batch: &[(&[f64], &GraspDistribution)]) -> Result<Loss, HeadError> {
    if batch.is_empty() {
        return Err(HeadError::EmptyBatch);
    }
    let mut loss = 0.0;
    for (x, y) in batch {
        loss += cross_entropy_raw(head.forward(x)?.as_array(), y.as_array());
    }
    Ok(Loss::new(loss / batch.len() as f64))
}

/// Adam moment estimates for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self { first_moment: vec![0.0; len], second_moment: vec![0.0; len], step: 0, beta1, beta2, eps }
    }

    /// State with the usual defaults `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`.
    pub fn with_defaults(len: usize) -> Self {
        Self::new(len, 0.9, 0.999, 1e-8)
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<(), HeadError> {
    if grads.len() != params.len() {
        return Err(HeadError::ShapeMismatch { expected: params.len(), actual: grads.len() });
    }
    if state.first_moment.len() != params.len() || state.second_moment.len() != params.len() {
        return Err(HeadError::ShapeMismatch { expected: params.len(), actual: state.first_moment.len() });
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - libm::pow(b1, t as f64);
    let c2 = 1.0 - libm::pow(b2, t as f64);
    for (((p, &g), m), v) in
        params.iter_mut().zip(grads).zip(state.first_moment.iter_mut()).zip(state.second_moment.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (libm::sqrt(v_hat) + state.eps);
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs_per_phase: usize,
    pub lr_phase1: f64,
    pub lr_phase2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub split_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 32,
            epochs_per_phase: 50,
            lr_phase1: 1e-3,
            lr_phase2: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            split_fraction: 0.8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), HeadError> {
        if self.batch_size == 0 {
            return Err(HeadError::InvalidConfig("batch_size must be positive"));
        }
        if self.epochs_per_phase == 0 {
            return Err(HeadError::InvalidConfig("epochs_per_phase must be positive"));
        }
        if !(self.lr_phase1 >= 0.0 && self.lr_phase2 >= 0.0) {
            return Err(HeadError::InvalidConfig("learning rates must be non-negative"));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(HeadError::InvalidConfig("split_fraction must be in (0, 1)"));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.eps > 0.0) {
            return Err(HeadError::InvalidConfig("Adam hyperparameters out of range"));
        }
        Ok(())
    }

    pub fn total_epochs(&self) -> usize {
        2 * self.epochs_per_phase
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingHistory {
    /// Phase (1 or 2) of each epoch.
    pub phase: Vec<u8>,
    /// Mean loss over the training split after each epoch.
    pub train_loss: Vec<f64>,
    /// Mean loss over the validation split after each epoch.
    pub val_loss: Vec<f64>,
    /// Mean angular similarity over the validation split after each epoch.
    pub val_similarity: Vec<f64>,
    /// Training loss of the freshly initialized head.
    pub initial_train_loss: f64,
    pub initial_val_similarity: f64,
}

impl TrainingHistory {
    pub fn epochs(&self) -> usize {
        self.train_loss.len()
    }
}

/// Seeded random partition of `n` rows. Returns `(train, validation)` indices,
/// each in ascending order. The training part has `round(n * fraction)` rows.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = stream(seed, STREAM_SPLIT);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let n_train = libm::round(n as f64 * fraction) as usize;
    let (train, val) = idx.split_at(n_train.min(n));
    let mut train = train.to_vec();
    let mut val = val.to_vec();
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

const STREAM_SPLIT: u64 = 0;
const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn pairs(rows: &[FeatureRow]) -> Vec<(&[f64], &GraspDistribution)> {
    rows.iter().map(|r| (r.features.as_slice(), &r.label)).collect()
}

/// Mean angular similarity of the head's predictions on `data`.
pub fn evaluate(head: &DenseHead, data: &FeatureDataset) -> Result<Similarity, HeadError> {
    let preds = predict(head, data)?;
    mean_angular_similarity(&preds, &data.labels()).map_err(|_| HeadError::InsufficientData("empty evaluation set"))
}

/// Trains a freshly initialized head in two phases.
///
/// Everything random (split, initialization, per-epoch shuffles) is derived
/// from `cfg.seed`. Phase 2 continues from the phase 1 parameters at the lower
/// learning rate with a fresh optimizer state. Every epoch reshuffles the
/// training split and keeps the final partial batch.
pub fn train(data: &FeatureDataset, cfg: &TrainConfig) -> Result<(DenseHead, TrainingHistory), HeadError> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(HeadError::InsufficientData("need at least two rows"));
    }
    if data.feature_dim() == 0 {
        return Err(HeadError::InsufficientData("feature dimension is zero"));
    }
    let (train_idx, val_idx) = split_indices(data.len(), cfg.split_fraction, cfg.seed);
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(HeadError::InsufficientData("a split partition is empty"));
    }
    let train_set = data.subset(&train_idx);
    let val_set = data.subset(&val_idx);
    let train_pairs = pairs(train_set.rows());
    let val_pairs = pairs(val_set.rows());

    let mut head = xavier_init_with(data.feature_dim(), &mut stream(cfg.seed, STREAM_INIT));
    let mut shuffle_rng = stream(cfg.seed, STREAM_SHUFFLE);

    let mut history = TrainingHistory {
        initial_train_loss: batch_loss(&head, &train_pairs)?.value(),
        initial_val_similarity: evaluate(&head, &val_set)?.value(),
        ..Default::default()
    };

    let mut order: Vec<usize> = (0..train_pairs.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for (phase, lr) in [(1u8, cfg.lr_phase1), (2u8, cfg.lr_phase2)] {
        let mut adam = AdamState::new(head.params.len(), cfg.beta1, cfg.beta2, cfg.eps);
        for _ in 0..cfg.epochs_per_phase {
            order.shuffle(&mut shuffle_rng);
            for chunk in order.chunks(cfg.batch_size) {
                batch.clear();
                batch.extend(chunk.iter().map(|&i| train_pairs[i]));
                let (_, grads) = loss_and_gradients(&head, &batch)?;
                adam_step(&mut head.params, &grads.values, &mut adam, lr)?;
            }
            history.phase.push(phase);
            history.train_loss.push(batch_loss(&head, &train_pairs)?.value());
            history.val_loss.push(batch_loss(&head, &val_pairs)?.value());
            history.val_similarity.push(evaluate(&head, &val_set)?.value());
        }
    }
    Ok((head, history))
}

/// Forward pass over every row, preserving order.
pub fn predict(head: &DenseHead, data: &FeatureDataset) -> Result<Vec<GraspDistribution>, HeadError> {
    if !data.is_empty() && data.feature_dim() != head.feature_dim {
        return Err(HeadError::ShapeMismatch { expected: head.feature_dim, actual: data.feature_dim() });
    }
    data.rows().iter().map(|r| head.forward(&r.features)).collect()
}
