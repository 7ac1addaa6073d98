//! Training loop with an online saturation measurement after every epoch.
//!
//! The measurement pass runs the network over a fixed, un-augmented subset
//! of the training split (the first `measure_samples` samples) and feeds
//! every captured layer into a covariance accumulator. It draws no random
//! numbers, so switching it off leaves the training trajectory unchanged.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::probes::argmax;
use crate::spectral::{self, CovarianceAccumulator, SaturationResult, DEFAULT_DELTA};

use super::data::{crop_and_flip, ChannelStats, Dataset};
use super::network::{softmax_cross_entropy, Network};
use super::optim::{LrSchedule, Optimizer, OptimizerKind};
use super::spec::NetworkSpec;
use super::LabError;

/// Samples per forward pass during evaluation and measurement.
pub const EVAL_CHUNK: usize = 256;
pub const DEFAULT_MEASURE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    #[default]
    None,
    /// Channel-wise standardization with training-split statistics.
    Normalize,
    /// Normalization plus random padded crops and horizontal flips.
    NormalizeCropFlip,
}

impl std::str::FromStr for Augmentation {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Augmentation::None),
            "normalize" => Ok(Augmentation::Normalize),
            "normalize+crop+flip" => Ok(Augmentation::NormalizeCropFlip),
            other => Err(LabError::InvalidConfig(format!(
                "augmentation must be none, normalize or normalize+crop+flip, got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub lr_decay: LrSchedule,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub augmentation: Augmentation,
    /// Run the saturation measurement pass after each epoch.
    pub measure: bool,
    pub measure_samples: usize,
    pub delta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::sgd(),
            learning_rate: 0.1,
            lr_decay: LrSchedule::None,
            batch_size: 64,
            epochs: 10,
            seed: 0,
            augmentation: Augmentation::None,
            measure: true,
            measure_samples: DEFAULT_MEASURE_SAMPLES,
            delta: DEFAULT_DELTA,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LabError> {
        let bad = |m: String| Err(LabError::InvalidConfig(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.measure && self.measure_samples < 2 {
            return bad("measure_samples must be at least 2".into());
        }
        spectral::check_delta(self.delta).map_err(|_| LabError::InvalidConfig(format!("delta must be in (0, 1], got {}", self.delta)))?;
        self.optimizer.validate()?;
        self.lr_decay.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
    /// One entry per captured layer, empty when measurement is off.
    pub saturation: Vec<SaturationResult>,
}

impl EpochRecord {
    /// `s_μ` over the measured layers.
    pub fn average_saturation(&self) -> Option<f64> {
        spectral::average_saturation(&self.saturation).ok()
    }

    pub fn layer_saturation(&self, layer: &str) -> Option<f64> {
        self.saturation.iter().find(|s| s.layer == layer).map(|s| s.saturation)
    }
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub network: Network,
    pub records: Vec<EpochRecord>,
    /// Statistics applied to the inputs when normalizing.
    pub normalization: Option<ChannelStats>,
}

impl TrainRun {
    pub fn last(&self) -> &EpochRecord {
        self.records.last().expect("at least one epoch")
    }

    /// Applies the run's input normalization to a dataset.
    pub fn prepare(&self, data: &Dataset) -> Dataset {
        let mut out = data.clone();
        if let Some(stats) = &self.normalization {
            stats.apply(&mut out);
        }
        out
    }
}

fn check_data(net: &Network, data: &Dataset, what: &str) -> Result<(), LabError> {
    if data.shape != net.input_shape() || data.classes != net.classes() {
        return Err(LabError::InvalidConfig(format!(
            "{what} data has shape {} and {} classes, network expects {} and {}",
            data.shape,
            data.classes,
            net.input_shape(),
            net.classes()
        )));
    }
    if data.is_empty() {
        return Err(LabError::InvalidConfig(format!("{what} data is empty")));
    }
    Ok(())
}

/// Trains a freshly initialized network and records one [`EpochRecord`] per epoch.
pub fn train(spec: &NetworkSpec, train_data: &Dataset, val_data: &Dataset, cfg: &TrainConfig) -> Result<TrainRun, LabError> {
    cfg.validate()?;
    let mut net = Network::new(spec, cfg.seed)?;
    check_data(&net, train_data, "training")?;
    check_data(&net, val_data, "validation")?;
    if cfg.augmentation == Augmentation::NormalizeCropFlip && !spec.input.is_image() {
        return Err(LabError::InvalidConfig("crop and flip need image inputs".into()));
    }

    let normalization = (cfg.augmentation != Augmentation::None).then(|| ChannelStats::fit(train_data));
    let (train_set, val_set) = match &normalization {
        Some(stats) => {
            let (mut t, mut v) = (train_data.clone(), val_data.clone());
            stats.apply(&mut t);
            stats.apply(&mut v);
            (t, v)
        }
        None => (train_data.clone(), val_data.clone()),
    };
    let measure_set = train_set.take(cfg.measure_samples);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut optimizer = Optimizer::new(cfg.optimizer, net.param_count());
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size * train_set.shape.len());
    let mut labels = Vec::with_capacity(cfg.batch_size);
    let mut records = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let lr = cfg.lr_decay.rate(cfg.learning_rate, epoch);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            train_set.gather(chunk, &mut batch);
            labels.clear();
            labels.extend(chunk.iter().map(|&i| train_set.labels[i]));
            if cfg.augmentation == Augmentation::NormalizeCropFlip {
                crop_and_flip(&mut batch, train_set.shape, &mut rng);
            }
            let (loss, grad) = net.loss_and_grad(&batch, &labels)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(LabError::Diverged { epoch, records });
            }
            loss_sum += loss * chunk.len() as f64;
            optimizer.step(net.params_mut(), &grad, lr);
        }
        let (val_loss, val_accuracy) = evaluate(&net, &val_set)?;
        if !val_loss.is_finite() {
            return Err(LabError::Diverged { epoch, records });
        }
        let saturation = if cfg.measure {
            measure_saturation(&net, &measure_set, cfg.delta)?
        } else {
            Vec::new()
        };
        records.push(EpochRecord {
            epoch,
            learning_rate: lr,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss,
            val_accuracy,
            saturation,
        });
    }
    Ok(TrainRun {
        network: net,
        records,
        normalization,
    })
}

/// Mean loss and top-1 accuracy over a dataset.
pub fn evaluate(net: &Network, data: &Dataset) -> Result<(f64, f64), LabError> {
    let mut loss = 0.0;
    let mut hits = 0;
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::new();
    for chunk in idx.chunks(EVAL_CHUNK) {
        batch.clear();
        data.gather(chunk, &mut batch);
        let labels: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
        let logits = net.logits(&batch, chunk.len())?;
        loss += softmax_cross_entropy(&logits, &labels, net.classes()).0 * chunk.len() as f64;
        hits += logits
            .chunks_exact(net.classes())
            .zip(&labels)
            .filter(|(row, &y)| argmax(row) == y)
            .count();
    }
    Ok((loss / data.len() as f64, hits as f64 / data.len() as f64))
}

/// Saturation of every captured layer over `data`, streamed in chunks.
pub fn measure_saturation(net: &Network, data: &Dataset, delta: f64) -> Result<Vec<SaturationResult>, LabError> {
    let shapes = net.capture_shapes();
    let mut accs: Vec<CovarianceAccumulator> = shapes.iter().map(|(_, s)| CovarianceAccumulator::new(s.channels())).collect();
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::new();
    for chunk in idx.chunks(EVAL_CHUNK) {
        batch.clear();
        data.gather(chunk, &mut batch);
        let fwd = net.forward(&batch, chunk.len())?;
        for (acc, cap) in accs.iter_mut().zip(&fwd.captures) {
            acc.accumulate(&cap.batch)?;
        }
    }
    shapes
        .iter()
        .zip(&accs)
        .map(|((name, _), acc)| Ok(spectral::saturation_of(name.clone(), acc, delta)?))
        .collect()
}
