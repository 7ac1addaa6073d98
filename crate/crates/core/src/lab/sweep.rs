//! Capacity and difficulty sweeps: one training run per configuration,
//! summarized by the final epoch's average saturation and accuracy.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use super::data::Dataset;
use super::spec::{LayerSpec, NetworkSpec, WidthScale};
use super::train::{train, TrainConfig, TrainRun};
use super::LabError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// Scale (`1/8`) for capacity sweeps, dataset name for difficulty sweeps.
    pub label: String,
    pub width_scale: WidthScale,
    pub dataset: String,
    /// `s_μ` after the last epoch.
    pub average_saturation: f64,
    pub val_accuracy: f64,
    pub val_loss: f64,
    /// Per-layer saturation after the last epoch.
    pub saturation: Vec<(String, f64)>,
}

impl SweepRow {
    fn from_run(label: String, spec: &NetworkSpec, dataset: &str, run: &TrainRun) -> Result<Self, LabError> {
        let last = run.last();
        let average_saturation = last
            .average_saturation()
            .ok_or_else(|| LabError::InvalidConfig("sweeps need saturation measurement and a hidden layer".into()))?;
        Ok(Self {
            label,
            width_scale: spec.width_scale,
            dataset: dataset.to_string(),
            average_saturation,
            val_accuracy: last.val_accuracy,
            val_loss: last.val_loss,
            saturation: last.saturation.iter().map(|s| (s.layer.clone(), s.saturation)).collect(),
        })
    }
}

/// Runs `task(i)` for `i in 0..n` on up to `jobs` threads, results in index order.
pub fn run_parallel<T: Send>(n: usize, jobs: usize, task: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let jobs = jobs.clamp(1, n.max(1));
    if jobs == 1 {
        return (0..n).map(task).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = task(i);
                slots.lock().expect("no panics while holding the lock")[i] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|s| s.expect("every task ran"))
        .collect()
}

/// Trains `base` once per width scale on the same data.
pub fn capacity_sweep(
    base: &NetworkSpec,
    scales: &[WidthScale],
    train_data: &Dataset,
    val_data: &Dataset,
    cfg: &TrainConfig,
    jobs: usize,
) -> Result<Vec<(SweepRow, TrainRun)>, LabError> {
    run_parallel(scales.len(), jobs, |i| {
        let spec = base.clone().with_scale(scales[i]);
        let run = train(&spec, train_data, val_data, cfg)?;
        Ok((SweepRow::from_run(scales[i].to_string(), &spec, &train_data.name, &run)?, run))
    })
    .into_iter()
    .collect()
}

/// Trains the same hidden layers on each `(train, validation)` pair; the
/// input shape and class count follow the dataset.
pub fn difficulty_sweep(
    layers: &[LayerSpec],
    scale: WidthScale,
    datasets: &[(Dataset, Dataset)],
    cfg: &TrainConfig,
    jobs: usize,
) -> Result<Vec<(SweepRow, TrainRun)>, LabError> {
    run_parallel(datasets.len(), jobs, |i| {
        let (tr, va) = &datasets[i];
        let spec = NetworkSpec::new(tr.shape, layers.to_vec(), tr.classes).with_scale(scale);
        let run = train(&spec, tr, va, cfg)?;
        Ok((SweepRow::from_run(tr.name.clone(), &spec, &tr.name, &run)?, run))
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::data::{blobs, BlobConfig};
    use crate::lab::spec::{parse_layers, InputShape};

    #[test]
    fn parallel_keeps_order() {
        let out = run_parallel(10, 3, |i| i * i);
        assert_eq!(out, (0..10).map(|i| i * i).collect::<Vec<_>>());
        assert!(run_parallel(0, 4, |i| i).is_empty());
    }

    #[test]
    fn single_scale_equals_a_plain_run() {
        let ds = blobs(&BlobConfig::new(3, 200, InputShape::Flat(5), 2)).unwrap();
        let (tr, va) = ds.split(50, 0).unwrap();
        let spec = NetworkSpec::new(ds.shape, parse_layers("dense:8 relu").unwrap(), 3);
        let cfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
        let rows = capacity_sweep(&spec, &[WidthScale::ONE], &tr, &va, &cfg, 1).unwrap();
        let plain = train(&spec, &tr, &va, &cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].1.records, plain.records);
        assert_eq!(rows[0].0.average_saturation, plain.last().average_saturation().unwrap());
    }

    #[test]
    fn jobs_do_not_change_results() {
        let ds = blobs(&BlobConfig::new(3, 120, InputShape::Flat(5), 2)).unwrap();
        let (tr, va) = ds.split(20, 0).unwrap();
        let spec = NetworkSpec::new(ds.shape, parse_layers("dense:8 relu").unwrap(), 3);
        let cfg = TrainConfig { epochs: 2, ..TrainConfig::default() };
        let scales = [WidthScale::ONE, WidthScale::new(2).unwrap(), WidthScale::new(4).unwrap()];
        let a = capacity_sweep(&spec, &scales, &tr, &va, &cfg, 1).unwrap();
        let b = capacity_sweep(&spec, &scales, &tr, &va, &cfg, 3).unwrap();
        let rows = |v: &[(SweepRow, TrainRun)]| v.iter().map(|r| r.0.clone()).collect::<Vec<_>>();
        assert_eq!(rows(&a), rows(&b));
    }
}
