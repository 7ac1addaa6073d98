//! Captured layer outputs and their memory layout.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayoutError {
    #[error("bad layout: {0}")]
    BadLayout(String),
}

/// Scalar types an activation batch may hold. Analysis always widens to `f64`.
pub trait Element: Copy + Send + Sync + 'static {
    fn to_f64(self) -> f64;
}

impl Element for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl Element for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Shape of one batch: either samples × features or N×C×H×W feature maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    Flat {
        samples: usize,
        features: usize,
    },
    Spatial {
        samples: usize,
        channels: usize,
        height: usize,
        width: usize,
    },
}

impl Layout {
    pub fn from_dims(dims: &[usize]) -> Result<Self, LayoutError> {
        match *dims {
            [samples, features] => Ok(Layout::Flat { samples, features }),
            [samples, channels, height, width] => Ok(Layout::Spatial {
                samples,
                channels,
                height,
                width,
            }),
            _ => Err(LayoutError::BadLayout(format!(
                "expected 2 or 4 dimensions, got {}",
                dims.len()
            ))),
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Layout::Flat { samples, features } => vec![samples, features],
            Layout::Spatial {
                samples,
                channels,
                height,
                width,
            } => vec![samples, channels, height, width],
        }
    }

    pub fn samples(&self) -> usize {
        match *self {
            Layout::Flat { samples, .. } | Layout::Spatial { samples, .. } => samples,
        }
    }

    /// Values per sample.
    pub fn sample_len(&self) -> usize {
        match *self {
            Layout::Flat { features, .. } => features,
            Layout::Spatial {
                channels,
                height,
                width,
                ..
            } => channels * height * width,
        }
    }

    pub fn len(&self) -> usize {
        self.samples() * self.sample_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Feature dimension seen by the covariance accumulator: the feature count
    /// for flat batches, the channel count for feature maps.
    pub fn extrinsic_dim(&self) -> usize {
        match *self {
            Layout::Flat { features, .. } => features,
            Layout::Spatial { channels, .. } => channels,
        }
    }
}

/// A batch of activations for one layer, stored row-major in its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationBatch<T = f64> {
    layout: Layout,
    data: Vec<T>,
}

impl<T: Element> ActivationBatch<T> {
    pub fn new(layout: Layout, data: Vec<T>) -> Result<Self, LayoutError> {
        if data.len() != layout.len() {
            return Err(LayoutError::BadLayout(format!(
                "layout {:?} needs {} values, got {}",
                layout.dims(),
                layout.len(),
                data.len()
            )));
        }
        Ok(Self { layout, data })
    }

    pub fn flat(samples: usize, features: usize, data: Vec<T>) -> Result<Self, LayoutError> {
        Self::new(Layout::Flat { samples, features }, data)
    }

    pub fn spatial(
        samples: usize,
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<T>,
    ) -> Result<Self, LayoutError> {
        Self::new(
            Layout::Spatial {
                samples,
                channels,
                height,
                width,
            },
            data,
        )
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn samples(&self) -> usize {
        self.layout.samples()
    }

    pub fn sample(&self, i: usize) -> &[T] {
        let len = self.layout.sample_len();
        &self.data[i * len..(i + 1) * len]
    }

    /// Keeps the first `n` samples.
    pub fn truncate(&mut self, n: usize) {
        let n = n.min(self.samples());
        self.data.truncate(n * self.layout.sample_len());
        self.layout = match self.layout {
            Layout::Flat { features, .. } => Layout::Flat {
                samples: n,
                features,
            },
            Layout::Spatial {
                channels,
                height,
                width,
                ..
            } => Layout::Spatial {
                samples: n,
                channels,
                height,
                width,
            },
        };
    }

    pub fn to_f64(&self) -> ActivationBatch<f64> {
        ActivationBatch {
            layout: self.layout,
            data: self.data.iter().map(|v| v.to_f64()).collect(),
        }
    }

    /// Turns N×C×H×W feature maps into (N·H·W)×C rows: every spatial position
    /// becomes one sample over the channel dimension.
    pub fn reshape_conv(&self) -> Result<ActivationBatch<T>, LayoutError> {
        let Layout::Spatial {
            samples,
            channels,
            height,
            width,
        } = self.layout
        else {
            return Err(LayoutError::BadLayout(
                "reshape_conv needs a 4-dimensional N×C×H×W batch".into(),
            ));
        };
        let plane = height * width;
        let mut out = Vec::with_capacity(self.data.len());
        for n in 0..samples {
            let base = n * channels * plane;
            for pos in 0..plane {
                for c in 0..channels {
                    out.push(self.data[base + c * plane + pos]);
                }
            }
        }
        Ok(ActivationBatch {
            layout: Layout::Flat {
                samples: samples * plane,
                features: channels,
            },
            data: out,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reshape_small_feature_map() {
        // channel 0 holds 0..4, channel 1 holds 10..14
        let data: Vec<f64> = vec![0.0, 1.0, 2.0, 3.0, 10.0, 11.0, 12.0, 13.0];
        let batch = ActivationBatch::spatial(1, 2, 2, 2, data).unwrap();
        let flat = batch.reshape_conv().unwrap();
        assert_eq!(flat.layout(), Layout::Flat { samples: 4, features: 2 });
        assert_eq!(flat.sample(0), &[0.0, 10.0]);
        assert_eq!(flat.sample(1), &[1.0, 11.0]);
        assert_eq!(flat.sample(2), &[2.0, 12.0]);
        assert_eq!(flat.sample(3), &[3.0, 13.0]);
    }

    #[test]
    fn constant_map_gives_identical_rows() {
        let batch = ActivationBatch::spatial(2, 3, 2, 3, vec![0.25f32; 36]).unwrap();
        let flat = batch.reshape_conv().unwrap();
        for i in 0..flat.samples() {
            assert_eq!(flat.sample(i), flat.sample(0));
        }
    }

    #[test]
    fn reshape_rejects_flat_input() {
        let batch = ActivationBatch::flat(2, 2, vec![0.0f64; 4]).unwrap();
        assert!(batch.reshape_conv().is_err());
    }

    #[test]
    fn length_is_validated() {
        assert!(ActivationBatch::flat(2, 3, vec![0.0f64; 5]).is_err());
        assert!(Layout::from_dims(&[1, 2, 3]).is_err());
    }

    proptest! {
        #[test]
        fn reshape_sample_count(n in 1usize..4, c in 1usize..5, h in 1usize..6, w in 1usize..6) {
            let data: Vec<f32> = (0..n * c * h * w).map(|i| i as f32).collect();
            let batch = ActivationBatch::spatial(n, c, h, w, data).unwrap();
            let flat = batch.reshape_conv().unwrap();
            prop_assert_eq!(flat.samples(), n * h * w);
            prop_assert_eq!(flat.layout().extrinsic_dim(), c);
        }
    }
}
