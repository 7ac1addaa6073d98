//! Datasets: seeded synthetic generators, MNIST IDX and CIFAR-10 binary
//! loaders, channel normalization and crop/flip augmentation.
//!
//! Loaders accept plain or gzip-compressed files.

use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use super::spec::InputShape;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: bad magic {found:#010x}, expected {expected:#010x}")]
    BadMagic { path: PathBuf, expected: u32, found: u32 },
    #[error("{path}: truncated file ({detail})")]
    TruncatedFile { path: PathBuf, detail: String },
    #[error("{path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Labelled samples stored row-major, one `shape.len()` row per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub shape: InputShape,
    pub inputs: Vec<f64>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        shape: InputShape,
        inputs: Vec<f64>,
        labels: Vec<usize>,
        classes: usize,
    ) -> Result<Self, DataError> {
        if inputs.len() != labels.len() * shape.len() {
            return Err(DataError::Invalid(format!(
                "{} labels but {} input values for shape {shape}",
                labels.len(),
                inputs.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= classes) {
            return Err(DataError::Invalid(format!("label {y} out of range for {classes} classes")));
        }
        Ok(Self {
            name: name.into(),
            shape,
            inputs,
            labels,
            classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        let d = self.shape.len();
        &self.inputs[i * d..(i + 1) * d]
    }

    /// Copies the given samples, in order, into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(indices.len() * self.shape.len());
        self.gather(indices, &mut inputs);
        Dataset {
            name: self.name.clone(),
            shape: self.shape,
            inputs,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
        }
    }

    /// First `n` samples (or all of them).
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            name: self.name.clone(),
            shape: self.shape,
            inputs: self.inputs[..n * self.shape.len()].to_vec(),
            labels: self.labels[..n].to_vec(),
            classes: self.classes,
        }
    }

    /// Seeded random split into `(train, held_out)` with `held_out` samples held out.
    pub fn split(&self, held_out: usize, seed: u64) -> Result<(Dataset, Dataset), DataError> {
        if held_out == 0 || held_out >= self.len() {
            return Err(DataError::Invalid(format!(
                "cannot hold out {held_out} of {} samples",
                self.len()
            )));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (rest, train) = idx.split_at(held_out);
        let mut train = train.to_vec();
        let mut rest = rest.to_vec();
        train.sort_unstable();
        rest.sort_unstable();
        Ok((self.subset(&train), self.subset(&rest)))
    }

    /// Appends the rows of `indices` to `out`.
    pub fn gather(&self, indices: &[usize], out: &mut Vec<f64>) {
        for &i in indices {
            out.extend_from_slice(self.sample(i));
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}

/// Gaussian class blobs. Class means are drawn from `N(0, separation² I)`
/// and samples from `N(mean, noise² I)` in a latent space of
/// `intrinsic_dim` dimensions (the full input size when `None`), which is
/// then mapped into the input by a fixed random linear embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobConfig {
    pub classes: usize,
    pub samples: usize,
    pub shape: InputShape,
    pub separation: f64,
    pub noise: f64,
    pub intrinsic_dim: Option<usize>,
    pub seed: u64,
}

impl BlobConfig {
    pub fn new(classes: usize, samples: usize, shape: InputShape, seed: u64) -> Self {
        Self {
            classes,
            samples,
            shape,
            separation: 1.0,
            noise: 1.0,
            intrinsic_dim: None,
            seed,
        }
    }
}

/// Balanced labels (`i mod classes`) in a seeded random order.
pub fn blobs(cfg: &BlobConfig) -> Result<Dataset, DataError> {
    if cfg.classes < 2 || cfg.samples == 0 {
        return Err(DataError::Invalid("blobs need at least 2 classes and 1 sample".into()));
    }
    let d = cfg.shape.len();
    let q = cfg.intrinsic_dim.unwrap_or(d);
    if q == 0 || q > d {
        return Err(DataError::Invalid(format!("intrinsic dimension {q} must be in 1..={d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
    let centers: Vec<f64> = (0..cfg.classes * q).map(|_| cfg.separation * normal(&mut rng)).collect();
    let embedding: Option<Vec<f64>> = cfg
        .intrinsic_dim
        .map(|_| (0..d * q).map(|_| normal(&mut rng) / (q as f64).sqrt()).collect());
    let mut labels: Vec<usize> = (0..cfg.samples).map(|i| i % cfg.classes).collect();
    labels.shuffle(&mut rng);
    let mut inputs = Vec::with_capacity(cfg.samples * d);
    let mut z = vec![0.0; q];
    for &y in &labels {
        for (k, zk) in z.iter_mut().enumerate() {
            *zk = centers[y * q + k] + cfg.noise * normal(&mut rng);
        }
        match &embedding {
            None => inputs.extend_from_slice(&z),
            Some(e) => inputs.extend(e.chunks_exact(q).map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>())),
        }
    }
    Dataset::new(format!("blobs{}", cfg.classes), cfg.shape, inputs, labels, cfg.classes)
}

/// Unlabelled points `x = P z` with `z ~ N(0, I_rank)` and `P` a random
/// `dim × rank` matrix with orthonormal columns.
pub fn low_rank(samples: usize, rank: usize, dim: usize, seed: u64) -> Result<Dataset, DataError> {
    if rank == 0 || rank > dim {
        return Err(DataError::Invalid(format!("rank {rank} must be in 1..={dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = orthonormal_columns(dim, rank, &mut rng);
    let mut inputs = Vec::with_capacity(samples * dim);
    for _ in 0..samples {
        let z: Vec<f64> = (0..rank).map(|_| rng.sample(StandardNormal)).collect();
        inputs.extend(basis.chunks_exact(rank).map(|row| row.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()));
    }
    Dataset::new("low_rank", InputShape::Flat(dim), inputs, vec![0; samples], 1)
}

/// Row-major `dim × rank` matrix with orthonormal columns (Gram-Schmidt on
/// Gaussian vectors, twice for stability).
pub fn orthonormal_columns(dim: usize, rank: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(rank);
    while cols.len() < rank {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for c in &cols {
                let dot: f64 = c.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= dot * ci;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            cols.push(v);
        }
    }
    let mut out = vec![0.0; dim * rank];
    for (j, c) in cols.iter().enumerate() {
        for (i, v) in c.iter().enumerate() {
            out[i * rank + j] = *v;
        }
    }
    out
}

fn read_file(path: &Path) -> Result<Vec<u8>, DataError> {
    let io_err = |source| DataError::Io { path: path.to_path_buf(), source };
    let mut raw = Vec::new();
    File::open(path).and_then(|mut f| f.read_to_end(&mut raw)).map_err(io_err)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice()).read_to_end(&mut out).map_err(io_err)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Parses an unsigned-byte IDX file with the given magic, returning its
/// dimensions and payload.
pub fn parse_idx(bytes: &[u8], magic: u32, path: &Path) -> Result<(Vec<usize>, Vec<u8>), DataError> {
    let truncated = |detail: String| DataError::TruncatedFile { path: path.to_path_buf(), detail };
    if bytes.len() < 4 {
        return Err(truncated("no magic number".into()));
    }
    let found = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes"));
    if found != magic {
        return Err(DataError::BadMagic { path: path.to_path_buf(), expected: magic, found });
    }
    let ndim = (magic & 0xff) as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(truncated("header cut short".into()));
    }
    let dims: Vec<usize> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().expect("4 bytes")) as usize)
        .collect();
    let expected = dims.iter().product::<usize>();
    let payload = &bytes[header..];
    if payload.len() < expected {
        return Err(truncated(format!("expected {expected} data bytes, found {}", payload.len())));
    }
    if payload.len() > expected {
        return Err(DataError::Malformed {
            path: path.to_path_buf(),
            detail: format!("{} bytes after the data", payload.len() - expected),
        });
    }
    Ok((dims, payload.to_vec()))
}

/// MNIST from an IDX image file and an IDX label file; pixels scaled to [0, 1].
pub fn load_mnist(images: impl AsRef<Path>, labels: impl AsRef<Path>, limit: Option<usize>) -> Result<Dataset, DataError> {
    let (ipath, lpath) = (images.as_ref(), labels.as_ref());
    let (dims, pixels) = parse_idx(&read_file(ipath)?, IDX_IMAGES_MAGIC, ipath)?;
    let (ldims, raw_labels) = parse_idx(&read_file(lpath)?, IDX_LABELS_MAGIC, lpath)?;
    if dims[0] != ldims[0] {
        return Err(DataError::Invalid(format!("{} images but {} labels", dims[0], ldims[0])));
    }
    let n = limit.map_or(dims[0], |l| l.min(dims[0]));
    let shape = InputShape::Image { channels: 1, height: dims[1], width: dims[2] };
    let inputs = pixels[..n * shape.len()].iter().map(|&p| p as f64 / 255.0).collect();
    let labels = raw_labels[..n].iter().map(|&y| y as usize).collect();
    Dataset::new("mnist", shape, inputs, labels, 10)
}

/// MNIST training split from a directory holding the standard file names,
/// optionally gzip-compressed.
pub fn load_mnist_dir(dir: impl AsRef<Path>, limit: Option<usize>) -> Result<Dataset, DataError> {
    let dir = dir.as_ref();
    let find = |stem: &str| {
        let plain = dir.join(stem);
        let gz = dir.join(format!("{stem}.gz"));
        if !plain.exists() && gz.exists() {
            gz
        } else {
            plain
        }
    };
    load_mnist(find("train-images-idx3-ubyte"), find("train-labels-idx1-ubyte"), limit)
}

pub const CIFAR_RECORD: usize = 3073;

/// CIFAR-10 binary batch: records of one label byte and 3072 CHW pixel bytes.
pub fn load_cifar10(path: impl AsRef<Path>, limit: Option<usize>) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    parse_cifar10(&bytes, limit, path)
}

pub fn parse_cifar10(bytes: &[u8], limit: Option<usize>, path: &Path) -> Result<Dataset, DataError> {
    if bytes.len() % CIFAR_RECORD != 0 {
        return Err(DataError::TruncatedFile {
            path: path.to_path_buf(),
            detail: format!("{} bytes is not a multiple of the {CIFAR_RECORD}-byte record", bytes.len()),
        });
    }
    let total = bytes.len() / CIFAR_RECORD;
    let n = limit.map_or(total, |l| l.min(total));
    let mut inputs = Vec::with_capacity(n * 3072);
    let mut labels = Vec::with_capacity(n);
    for (i, rec) in bytes.chunks_exact(CIFAR_RECORD).take(n).enumerate() {
        if rec[0] >= 10 {
            return Err(DataError::Malformed {
                path: path.to_path_buf(),
                detail: format!("record {i} has label {}", rec[0]),
            });
        }
        labels.push(rec[0] as usize);
        inputs.extend(rec[1..].iter().map(|&p| p as f64 / 255.0));
    }
    let shape = InputShape::Image { channels: 3, height: 32, width: 32 };
    Dataset::new("cifar10", shape, inputs, labels, 10)
}

/// Per-channel mean and standard deviation (per feature for flat inputs).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStats {
    pub fn fit(data: &Dataset) -> Self {
        let (channels, plane) = match data.shape {
            InputShape::Flat(d) => (d, 1),
            InputShape::Image { channels, height, width } => (channels, height * width),
        };
        let count = (data.len() * plane) as f64;
        let mut mean = vec![0.0; channels];
        let mut sq = vec![0.0; channels];
        for s in data.inputs.chunks_exact(channels * plane) {
            for (c, vals) in s.chunks_exact(plane).enumerate() {
                mean[c] += vals.iter().sum::<f64>();
            }
        }
        mean.iter_mut().for_each(|m| *m /= count);
        for s in data.inputs.chunks_exact(channels * plane) {
            for (c, vals) in s.chunks_exact(plane).enumerate() {
                sq[c] += vals.iter().map(|v| (v - mean[c]) * (v - mean[c])).sum::<f64>();
            }
        }
        let std = sq.iter().map(|s| (s / count).sqrt()).collect();
        Self { mean, std }
    }

    /// Maps every channel to zero mean and unit variance; constant channels
    /// become zero.
    pub fn apply(&self, data: &mut Dataset) {
        let channels = self.mean.len();
        let plane = data.shape.len() / channels;
        for s in data.inputs.chunks_exact_mut(channels * plane) {
            for (c, vals) in s.chunks_exact_mut(plane).enumerate() {
                let inv = if self.std[c] > 1e-12 { 1.0 / self.std[c] } else { 0.0 };
                vals.iter_mut().for_each(|v| *v = (*v - self.mean[c]) * inv);
            }
        }
    }
}

pub const CROP_PADDING: usize = 4;

/// Random crop after zero padding by [`CROP_PADDING`] and horizontal flip
/// with probability one half, in place on a batch of images.
pub fn crop_and_flip(batch: &mut [f64], shape: InputShape, rng: &mut impl Rng) {
    let InputShape::Image { height, width, .. } = shape else {
        return;
    };
    let pad = CROP_PADDING as isize;
    let mut scratch = vec![0.0; height * width];
    for sample in batch.chunks_exact_mut(shape.len()) {
        let dy = rng.gen_range(-pad..=pad);
        let dx = rng.gen_range(-pad..=pad);
        let flip = rng.gen_bool(0.5);
        for plane in sample.chunks_exact_mut(height * width) {
            for y in 0..height {
                for x in 0..width {
                    let sy = y as isize + dy;
                    let sx0 = x as isize + dx;
                    let sx = if flip { width as isize - 1 - sx0 } else { sx0 };
                    let inside = sy >= 0 && sy < height as isize && sx >= 0 && sx < width as isize;
                    scratch[y * width + x] = if inside { plane[sy as usize * width + sx as usize] } else { 0.0 };
                }
            }
            plane.copy_from_slice(&scratch);
        }
    }
}
