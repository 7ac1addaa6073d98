//! Logistic-regression probes on captured layer outputs.
//!
//! A probe is a multinomial logistic regression trained on the network's own
//! task with one layer's output as input. Its test accuracy `p_l` measures the
//! quality of the intermediate solution at that layer.
//!
//! Feature maps are adaptively average-pooled to at most `pool_cap × pool_cap`
//! before flattening, and every feature is standardized with training-split
//! statistics before fitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::activation::{ActivationBatch, Element, Layout, LayoutError};
use crate::kernels::{gemm_nt, gemm_tn};
use crate::linalg::Matrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("labels contain a single class; a probe needs at least two")]
    DegenerateLabels,
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("train and test splits share sample {0}")]
    OverlappingSplit(usize),
    #[error("sample index {index} out of range for {len} samples")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{what}: expected {expected} samples, found {found}")]
    SampleMisalignment {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid probe config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    /// Largest pooled grid side for feature maps.
    pub pool_cap: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 40,
            batch_size: 256,
            l2: 1e-4,
            pool_cap: 4,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |m: &str| Err(ProbeError::InvalidConfig(m.to_string()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("l2 must be non-negative");
        }
        if self.pool_cap == 0 {
            return bad("pool_cap must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub layer: String,
    pub train_accuracy: f64,
    /// `p_l`.
    pub test_accuracy: f64,
    pub feature_dim: usize,
    /// Pooling cap applied, for feature-map inputs.
    pub pool_cap: Option<usize>,
}

/// Disjoint train/test sample indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn new(train: Vec<usize>, test: Vec<usize>) -> Self {
        Self { train, test }
    }

    /// Seeded random holdout of `round(n · test_fraction)` samples (at least one).
    pub fn holdout(n: usize, test_fraction: f64, seed: u64) -> Self {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1.min(n), n);
        let mut test = idx.split_off(n - n_test);
        let mut train = idx;
        train.sort_unstable();
        test.sort_unstable();
        Self { train, test }
    }

    pub fn validate(&self, n: usize) -> Result<(), ProbeError> {
        if self.train.is_empty() {
            return Err(ProbeError::EmptySplit("train"));
        }
        if self.test.is_empty() {
            return Err(ProbeError::EmptySplit("test"));
        }
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.test) {
            if i >= n {
                return Err(ProbeError::IndexOutOfRange { index: i, len: n });
            }
            if seen[i] {
                return Err(ProbeError::OverlappingSplit(i));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// Samples × features matrix for a probe. Flat batches pass through;
/// feature maps are adaptively average-pooled to at most `cap × cap` and
/// flattened channel-major.
pub fn probe_features<T: Element>(batch: &ActivationBatch<T>, cap: usize) -> Result<Matrix, ProbeError> {
    if cap == 0 {
        return Err(ProbeError::InvalidConfig("pool_cap must be at least 1".into()));
    }
    match batch.layout() {
        Layout::Flat { samples, features } => Ok(Matrix::new(
            samples,
            features,
            batch.data().iter().map(|v| v.to_f64()).collect(),
        )
        .expect("layout length was validated")),
        Layout::Spatial {
            samples,
            channels,
            height,
            width,
        } => {
            let oh = height.min(cap);
            let ow = width.min(cap);
            let rows: Vec<(usize, usize)> = (0..oh).map(|i| adaptive_bin(i, height, oh)).collect();
            let cols: Vec<(usize, usize)> = (0..ow).map(|j| adaptive_bin(j, width, ow)).collect();
            let features = channels * oh * ow;
            let mut out = Vec::with_capacity(samples * features);
            for s in 0..samples {
                let sample = batch.sample(s);
                for c in 0..channels {
                    let plane = &sample[c * height * width..(c + 1) * height * width];
                    for &(r0, r1) in &rows {
                        for &(c0, c1) in &cols {
                            let mut acc = 0.0;
                            for y in r0..r1 {
                                for x in c0..c1 {
                                    acc += plane[y * width + x].to_f64();
                                }
                            }
                            out.push(acc / ((r1 - r0) * (c1 - c0)) as f64);
                        }
                    }
                }
            }
            Ok(Matrix::new(samples, features, out).expect("sized above"))
        }
    }
}

/// Half-open input range covered by output cell `i` of `out` cells.
fn adaptive_bin(i: usize, len: usize, out: usize) -> (usize, usize) {
    let start = i * len / out;
    let end = ((i + 1) * len).div_ceil(out);
    (start, end)
}

/// Parameters of a multinomial logistic regression: `weights` is
/// classes × features.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LogisticModel {
    pub fn zeros(classes: usize, features: usize) -> Self {
        Self {
            weights: Matrix::zeros(classes, features),
            bias: vec![0.0; classes],
        }
    }

    pub fn classes(&self) -> usize {
        self.bias.len()
    }

    /// Logits for `rows` (n × features, row-major).
    pub fn logits(&self, rows: &[f64], n: usize) -> Vec<f64> {
        let k = self.classes();
        let d = self.weights.cols();
        let mut out = vec![0.0; n * k];
        for row in out.chunks_exact_mut(k) {
            row.copy_from_slice(&self.bias);
        }
        gemm_nt(n, d, k, rows, self.weights.as_slice(), 1.0, &mut out);
        out
    }

    pub fn predict(&self, rows: &[f64], n: usize) -> Vec<usize> {
        let k = self.classes();
        self.logits(rows, n).chunks_exact(k).map(argmax).collect()
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mean softmax cross-entropy plus `l2/2 · ‖W‖²`, with its gradient.
///
/// Returns `(loss, grad_weights, grad_bias)`.
pub fn softmax_cross_entropy(
    model: &LogisticModel,
    rows: &[f64],
    labels: &[usize],
    l2: f64,
) -> (f64, Matrix, Vec<f64>) {
    let n = labels.len();
    let k = model.classes();
    let d = model.weights.cols();
    let mut probs = model.logits(rows, n);
    let mut loss = 0.0;
    for (row, &y) in probs.chunks_exact_mut(k).zip(labels) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            z += *v;
        }
        loss += z.ln() - (row[y].ln());
        for v in row.iter_mut() {
            *v /= z;
        }
        row[y] -= 1.0;
    }
    let scale = 1.0 / n as f64;
    loss *= scale;
    for v in probs.iter_mut() {
        *v *= scale;
    }
    // probs now holds dL/dlogits
    let mut grad_w = Matrix::zeros(k, d);
    gemm_tn(k, n, d, &probs, rows, 0.0, grad_w.as_mut_slice());
    let mut grad_b = vec![0.0; k];
    for row in probs.chunks_exact(k) {
        for (g, v) in grad_b.iter_mut().zip(row) {
            *g += v;
        }
    }
    if l2 > 0.0 {
        let w = model.weights.as_slice();
        loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
        for (g, v) in grad_w.as_mut_slice().iter_mut().zip(w) {
            *g += l2 * v;
        }
    }
    (loss, grad_w, grad_b)
}

/// Per-feature affine map fitted on training rows: `(x − mean) / std`,
/// constant features map to zero.
struct Standardizer {
    mean: Vec<f64>,
    inv_std: Vec<f64>,
}

impl Standardizer {
    fn fit(features: &Matrix, rows: &[usize]) -> Self {
        let d = features.cols();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for &r in rows {
            for (m, v) in mean.iter_mut().zip(features.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &r in rows {
            for ((s, v), m) in var.iter_mut().zip(features.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let inv_std = var
            .iter()
            .zip(&mean)
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 * m.abs().max(1.0) {
                    1.0 / sd
                } else {
                    0.0
                }
            })
            .collect();
        Self { mean, inv_std }
    }

    fn gather(&self, features: &Matrix, rows: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(rows.len() * features.cols());
        for &r in rows {
            for ((v, m), s) in features.row(r).iter().zip(&self.mean).zip(&self.inv_std) {
                out.push((v - m) * s);
            }
        }
        out
    }
}

fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    let hits = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
    hits as f64 / labels.len() as f64
}

/// Fits a probe with shuffled mini-batch gradient descent and reports its
/// train and test accuracy.
pub fn train_probe(
    layer: impl Into<String>,
    features: &Matrix,
    labels: &[usize],
    split: &Split,
    cfg: &ProbeConfig,
) -> Result<ProbeResult, ProbeError> {
    cfg.validate()?;
    let n = features.rows();
    if labels.len() != n {
        return Err(ProbeError::SampleMisalignment {
            what: "labels".into(),
            expected: n,
            found: labels.len(),
        });
    }
    split.validate(n)?;
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let first = labels[split.train[0]];
    if split.train.iter().chain(&split.test).all(|&i| labels[i] == first) {
        return Err(ProbeError::DegenerateLabels);
    }

    let d = features.cols();
    let standardizer = Standardizer::fit(features, &split.train);
    let train_rows = standardizer.gather(features, &split.train);
    let train_labels: Vec<usize> = split.train.iter().map(|&i| labels[i]).collect();
    let test_rows = standardizer.gather(features, &split.test);
    let test_labels: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();

    let mut model = LogisticModel::zeros(classes, d);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_labels.len()).collect();
    let mut batch_rows = Vec::with_capacity(cfg.batch_size * d);
    let mut batch_labels = Vec::with_capacity(cfg.batch_size);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch_rows.clear();
            batch_labels.clear();
            for &i in chunk {
                batch_rows.extend_from_slice(&train_rows[i * d..(i + 1) * d]);
                batch_labels.push(train_labels[i]);
            }
            let (_, grad_w, grad_b) = softmax_cross_entropy(&model, &batch_rows, &batch_labels, cfg.l2);
            for (w, g) in model.weights.as_mut_slice().iter_mut().zip(grad_w.as_slice()) {
                *w -= cfg.learning_rate * g;
            }
            for (b, g) in model.bias.iter_mut().zip(&grad_b) {
                *b -= cfg.learning_rate * g;
            }
        }
    }

    Ok(ProbeResult {
        layer: layer.into(),
        train_accuracy: accuracy(&model.predict(&train_rows, train_labels.len()), &train_labels),
        test_accuracy: accuracy(&model.predict(&test_rows, test_labels.len()), &test_labels),
        feature_dim: d,
        pool_cap: None,
    })
}

/// One named layer's captured outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations<T = f64> {
    pub name: String,
    pub batch: ActivationBatch<T>,
}

/// Trains one probe per layer, in the given (depth) order.
pub fn probe_sweep<T: Element>(
    layers: &[LayerActivations<T>],
    labels: &[usize],
    split: &Split,
    cfg: &ProbeConfig,
) -> Result<Vec<ProbeResult>, ProbeError> {
    cfg.validate()?;
    for layer in layers {
        if layer.batch.samples() != labels.len() {
            return Err(ProbeError::SampleMisalignment {
                what: format!("layer {}", layer.name),
                expected: labels.len(),
                found: layer.batch.samples(),
            });
        }
    }
    layers
        .iter()
        .map(|layer| {
            let features = probe_features(&layer.batch, cfg.pool_cap)?;
            let mut result = train_probe(layer.name.clone(), &features, labels, split, cfg)?;
            if matches!(layer.batch.layout(), Layout::Spatial { .. }) {
                result.pool_cap = Some(cfg.pool_cap);
            }
            Ok(result)
        })
        .collect()
}
