//! Layer saturation: the share of a layer's output dimensions needed to
//! explain a fixed fraction `delta` of its activation variance.
//!
//! Activations stream into a [`CovarianceAccumulator`] (one per layer, shards
//! combined with [`CovarianceAccumulator::merge`]). The finalized covariance is
//! eigendecomposed and the smallest `k` whose leading eigenvalues reach
//! `delta` of the total variance is the relevant dimension. Saturation is
//! `k / d`.

mod accumulator;
mod tail;

use serde::Serialize;
use thiserror::Error;

use crate::activation::LayoutError;
use crate::linalg::{self, EigenSpectrum, LinalgError, Matrix};

pub use accumulator::CovarianceAccumulator;
pub use tail::{detect_tail, detect_tail_values, TailReport, TAIL_FRACTION};

/// Default variance threshold.
pub const DEFAULT_DELTA: f64 = 0.99;

/// Relative slack on the threshold comparison. Eigenvalues below this share
/// of the total are solver noise; without it `delta = 1.0` would count them.
const THRESHOLD_SLACK: f64 = linalg::JACOBI_TOL;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("non-finite activation at flat index {index}")]
    NonFiniteActivation { index: usize },
    #[error("covariance needs at least 2 samples, have {n}")]
    InsufficientSamples { n: u64 },
    #[error("delta must lie in (0, 1], got {0}")]
    InvalidDelta(f64),
    #[error("no saturation results given")]
    EmptyInput,
    #[error("tail detection needs at least 3 layers, got {0}")]
    TooFewLayers(usize),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Saturation of one layer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaturationResult {
    pub layer: String,
    /// Raw output dimension of the layer (channels for feature maps).
    pub extrinsic_dim: usize,
    /// Dimension of the eigenspace reaching `delta` of the variance.
    pub relevant_dim: usize,
    pub saturation: f64,
    pub delta: f64,
    #[serde(serialize_with = "serialize_spectrum")]
    pub spectrum: EigenSpectrum,
}

fn serialize_spectrum<S: serde::Serializer>(s: &EigenSpectrum, ser: S) -> Result<S::Ok, S::Error> {
    s.values().serialize(ser)
}

pub fn check_delta(delta: f64) -> Result<f64, SpectralError> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(delta)
    } else {
        Err(SpectralError::InvalidDelta(delta))
    }
}

/// Smallest `k` whose leading eigenvalues explain at least `delta` of the
/// variance; zero when the total variance vanishes.
pub fn relevant_dimension(spectrum: &EigenSpectrum, delta: f64) -> Result<usize, SpectralError> {
    check_delta(delta)?;
    let total = spectrum.total();
    if total <= linalg::ZERO_VARIANCE {
        return Ok(0);
    }
    let target = delta * total - THRESHOLD_SLACK * total;
    let mut running = 0.0;
    for (i, v) in spectrum.values().iter().enumerate() {
        running += v;
        if running >= target {
            return Ok(i + 1);
        }
    }
    Ok(spectrum.len())
}

/// Saturation of a layer from its activation covariance.
pub fn saturation(layer: impl Into<String>, cov: &Matrix, delta: f64) -> Result<SaturationResult, SpectralError> {
    check_delta(delta)?;
    let spectrum = linalg::eigh(cov)?;
    let extrinsic_dim = cov.rows();
    let relevant_dim = relevant_dimension(&spectrum, delta)?;
    let saturation = if extrinsic_dim == 0 {
        0.0
    } else {
        relevant_dim as f64 / extrinsic_dim as f64
    };
    Ok(SaturationResult {
        layer: layer.into(),
        extrinsic_dim,
        relevant_dim,
        saturation,
        delta,
        spectrum,
    })
}

/// Finalizes an accumulator and computes the layer's saturation.
pub fn saturation_of(
    layer: impl Into<String>,
    acc: &CovarianceAccumulator,
    delta: f64,
) -> Result<SaturationResult, SpectralError> {
    saturation(layer, &acc.finalize()?, delta)
}

/// Mean saturation `s_μ` over the given layers.
pub fn average_saturation(results: &[SaturationResult]) -> Result<f64, SpectralError> {
    if results.is_empty() {
        return Err(SpectralError::EmptyInput);
    }
    Ok(results.iter().map(|r| r.saturation).sum::<f64>() / results.len() as f64)
}
