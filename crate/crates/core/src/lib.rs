//! Measuring how deep networks use their representational capacity.

pub mod activation;
pub mod linalg;
pub mod spectral;
pub mod rf;
pub mod format;
pub mod probes;
pub mod lab;

mod kernels;
