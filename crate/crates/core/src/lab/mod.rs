//! A small from-scratch trainer for MLPs and CNNs with activation capture,
//! used to run saturation experiments at desk scale.

pub mod capture;
pub mod config;
pub mod data;
pub mod network;
pub mod optim;
pub mod spec;
pub mod sweep;
pub mod train;

use thiserror::Error;

use crate::activation::LayoutError;
use crate::format::FormatError;
use crate::probes::ProbeError;
use crate::spectral::SpectralError;

pub use data::{BlobConfig, ChannelStats, DataError, Dataset};
pub use network::{Forward, Network};
pub use optim::{LrSchedule, Optimizer, OptimizerKind};
pub use spec::{InputShape, LayerSpec, NetworkSpec, WidthScale};
pub use train::{train, Augmentation, EpochRecord, TrainConfig, TrainRun};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid network: {0}")]
    InvalidSpec(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("input has {found} values, expected {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("loss diverged in epoch {epoch}")]
    Diverged { epoch: usize, records: Vec<EpochRecord> },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
}
