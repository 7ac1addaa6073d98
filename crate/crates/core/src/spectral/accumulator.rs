use crate::activation::{ActivationBatch, Element, Layout};
use crate::linalg::Matrix;

use super::SpectralError;

/// Rows gathered before each rank-k update of the outer-product sum.
const CHUNK_ROWS: usize = 256;

/// Mergeable running statistics over one layer's activations:
/// sample count, feature sums and the sum of outer products `Σ x xᵀ`.
///
/// Feature maps contribute one sample per spatial position (see
/// [`ActivationBatch::reshape_conv`]), so `dim` is the channel count for
/// convolutional layers.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceAccumulator {
    dim: usize,
    n: u64,
    sum: Vec<f64>,
    outer_sum: Matrix,
}

impl CovarianceAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            n: 0,
            sum: vec![0.0; dim],
            outer_sum: Matrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn sum(&self) -> &[f64] {
        &self.sum
    }

    pub fn outer_sum(&self) -> &Matrix {
        &self.outer_sum
    }

    /// Adds every sample of `batch`. Feature maps are read position by position.
    ///
    /// The accumulator is left untouched when an error is returned.
    pub fn accumulate<T: Element>(&mut self, batch: &ActivationBatch<T>) -> Result<(), SpectralError> {
        let layout = batch.layout();
        if layout.extrinsic_dim() != self.dim {
            return Err(SpectralError::DimMismatch {
                expected: self.dim,
                found: layout.extrinsic_dim(),
            });
        }
        check_finite(batch.data())?;
        match layout {
            Layout::Flat { .. } => self.add_rows(batch.data()),
            Layout::Spatial {
                samples,
                channels,
                height,
                width,
            } => {
                let plane = height * width;
                let data = batch.data();
                let mut buf = Vec::with_capacity(CHUNK_ROWS * channels);
                for s in 0..samples {
                    let base = s * channels * plane;
                    for pos in 0..plane {
                        for c in 0..channels {
                            buf.push(data[base + c * plane + pos].to_f64());
                        }
                        if buf.len() == CHUNK_ROWS * channels {
                            self.add_rows(&buf);
                            buf.clear();
                        }
                    }
                }
                if !buf.is_empty() {
                    self.add_rows(&buf);
                }
            }
        }
        Ok(())
    }

    /// Adds samples stored as consecutive rows of length `dim`.
    pub fn accumulate_rows<T: Element>(&mut self, rows: &[T]) -> Result<(), SpectralError> {
        if self.dim == 0 || rows.len() % self.dim != 0 {
            return Err(SpectralError::DimMismatch {
                expected: self.dim,
                found: rows.len(),
            });
        }
        check_finite(rows)?;
        self.add_rows(rows);
        Ok(())
    }

    fn add_rows<T: Element>(&mut self, rows: &[T]) {
        let d = self.dim;
        if d == 0 {
            return;
        }
        for chunk in rows.chunks(CHUNK_ROWS * d) {
            let widened: Vec<f64> = chunk.iter().map(|v| v.to_f64()).collect();
            let count = widened.len() / d;
            for row in widened.chunks_exact(d) {
                for (s, v) in self.sum.iter_mut().zip(row) {
                    *s += v;
                }
            }
            // outer_sum += Xᵀ X, with X the count×d chunk
            unsafe {
                matrixmultiply::dgemm(
                    d,
                    count,
                    d,
                    1.0,
                    widened.as_ptr(),
                    1,
                    d as isize,
                    widened.as_ptr(),
                    d as isize,
                    1,
                    1.0,
                    self.outer_sum.as_mut_slice().as_mut_ptr(),
                    d as isize,
                    1,
                );
            }
            self.n += count as u64;
        }
        self.outer_sum.symmetrize();
    }

    /// Combines two accumulators as if one had seen both sample sets.
    pub fn merge(&self, other: &CovarianceAccumulator) -> Result<CovarianceAccumulator, SpectralError> {
        let mut out = self.clone();
        out.merge_in(other)?;
        Ok(out)
    }

    pub fn merge_in(&mut self, other: &CovarianceAccumulator) -> Result<(), SpectralError> {
        if self.dim != other.dim {
            return Err(SpectralError::DimMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self
            .outer_sum
            .as_mut_slice()
            .iter_mut()
            .zip(other.outer_sum.as_slice())
        {
            *a += b;
        }
        Ok(())
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.n.max(1) as f64;
        self.sum.iter().map(|s| s / n).collect()
    }

    /// Population covariance `Σxxᵀ/n − μμᵀ`, symmetrized.
    pub fn finalize(&self) -> Result<Matrix, SpectralError> {
        if self.n < 2 {
            return Err(SpectralError::InsufficientSamples { n: self.n });
        }
        let n = self.n as f64;
        let mean = self.mean();
        let d = self.dim;
        let mut cov = Matrix::from_fn(d, d, |i, j| self.outer_sum.get(i, j) / n - mean[i] * mean[j]);
        cov.symmetrize();
        cov.check_finite()?;
        Ok(cov)
    }
}

fn check_finite<T: Element>(values: &[T]) -> Result<(), SpectralError> {
    match values.iter().position(|v| !v.to_f64().is_finite()) {
        Some(index) => Err(SpectralError::NonFiniteActivation { index }),
        None => Ok(()),
    }
}
