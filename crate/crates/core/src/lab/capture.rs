//! Capturing hidden-layer outputs of a trained network: SATD dumps for the
//! offline tools and pooled probe features for in-process probing.

use std::fs;
use std::path::Path;

use crate::activation::ActivationBatch;
use crate::format::{self, Manifest};
use crate::linalg::Matrix;
use crate::probes::{self, ProbeConfig, ProbeResult, Split};

use super::data::Dataset;
use super::network::Network;
use super::train::EVAL_CHUNK;
use super::LabError;

pub const LABELS_FILE: &str = "labels.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Captured outputs of every hidden layer on the first `samples` samples,
/// narrowed to 32-bit floats.
pub fn capture(net: &Network, data: &Dataset, samples: usize) -> Result<Vec<(String, ActivationBatch<f32>)>, LabError> {
    let n = samples.min(data.len());
    let mut out: Vec<(String, Vec<f32>, Vec<usize>)> = Vec::new();
    let idx: Vec<usize> = (0..n).collect();
    let mut batch = Vec::new();
    for chunk in idx.chunks(EVAL_CHUNK) {
        batch.clear();
        data.gather(chunk, &mut batch);
        let fwd = net.forward(&batch, chunk.len())?;
        if out.is_empty() {
            out = fwd
                .captures
                .iter()
                .map(|c| (c.name.clone(), Vec::new(), c.batch.layout().dims()))
                .collect();
        }
        for (slot, cap) in out.iter_mut().zip(&fwd.captures) {
            slot.1.extend(cap.batch.data().iter().map(|&v| v as f32));
        }
    }
    out.into_iter()
        .map(|(name, data, mut dims)| {
            dims[0] = n;
            let layout = crate::activation::Layout::from_dims(&dims)?;
            Ok((name, ActivationBatch::new(layout, data)?))
        })
        .collect()
}

/// Writes one dump per captured layer, the labels and a manifest into `dir`.
pub fn write_capture(net: &Network, data: &Dataset, samples: usize, dir: &Path) -> Result<Manifest, LabError> {
    fs::create_dir_all(dir).map_err(format::FormatError::from)?;
    let mut manifest = Manifest::new("post-activation");
    for (i, (name, batch)) in capture(net, data, samples)?.iter().enumerate() {
        let file = format!("{:02}_{}.satd", i + 1, name.replace('.', "_"));
        format::write_dump(dir.join(&file), name, batch)?;
        let kind = name.rsplit('.').next().map(str::to_string);
        manifest.push(name.clone(), file, kind);
    }
    let n = samples.min(data.len());
    format::write_labels(dir.join(LABELS_FILE), &data.labels[..n])?;
    manifest.labels = Some(LABELS_FILE.to_string());
    // The manifest goes last so that its presence marks a complete capture.
    format::write_manifest(dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Probe features (pooled to at most `pool_cap × pool_cap`) of every hidden
/// layer over the whole dataset, computed chunk by chunk.
pub fn probe_features(net: &Network, data: &Dataset, pool_cap: usize) -> Result<Vec<(String, Matrix)>, LabError> {
    let names = net.capture_names();
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut cols = vec![0; names.len()];
    let idx: Vec<usize> = (0..data.len()).collect();
    let mut batch = Vec::new();
    for chunk in idx.chunks(EVAL_CHUNK) {
        batch.clear();
        data.gather(chunk, &mut batch);
        let fwd = net.forward(&batch, chunk.len())?;
        for (i, cap) in fwd.captures.iter().enumerate() {
            let m = probes::probe_features(&cap.batch, pool_cap)?;
            cols[i] = m.cols();
            rows[i].extend_from_slice(m.as_slice());
        }
    }
    Ok(names
        .into_iter()
        .zip(rows.into_iter().zip(cols))
        .map(|(name, (data_rows, c))| {
            let r = if c == 0 { 0 } else { data_rows.len() / c };
            (name, Matrix::new(r, c, data_rows).expect("rows are whole"))
        })
        .collect())
}

/// One probe per hidden layer, in depth order.
pub fn probe_network(net: &Network, data: &Dataset, split: &Split, cfg: &ProbeConfig) -> Result<Vec<ProbeResult>, LabError> {
    let shapes = net.capture_shapes();
    probe_features(net, data, cfg.pool_cap)?
        .into_iter()
        .zip(shapes)
        .map(|((name, features), (_, shape))| {
            let mut r = probes::train_probe(name, &features, &data.labels, split, cfg)?;
            if shape.is_image() {
                r.pool_cap = Some(cfg.pool_cap);
            }
            Ok(r)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::data::{blobs, BlobConfig};
    use crate::lab::spec::{parse_layers, NetworkSpec};

    #[test]
    fn dumps_round_trip_through_the_manifest() {
        let data = blobs(&BlobConfig::new(2, 300, "1x6x6".parse().unwrap(), 0)).unwrap();
        let spec = NetworkSpec::new(data.shape, parse_layers("conv:3:3 relu flatten dense:5 relu").unwrap(), 2);
        let net = Network::new(&spec, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_capture(&net, &data, 260, dir.path()).unwrap();
        assert_eq!(manifest.layers.len(), 2);
        let loaded = format::read_manifest(dir.path().join(MANIFEST_FILE)).unwrap();
        let paths = loaded.dump_paths();
        let (header, batch) = format::read_dump(&paths[0].1).unwrap();
        assert_eq!(header.layer_name, "l01.conv");
        assert_eq!(batch.layout().dims(), vec![260, 3, 4, 4]);
        let direct = net.forward(data.sample(259), 1).unwrap();
        let last = batch.sample(259);
        for (a, b) in last.iter().zip(direct.captures[0].batch.data()) {
            assert_eq!(*a, *b as f32);
        }
        let labels = format::read_labels(loaded.labels_path().unwrap()).unwrap();
        assert_eq!(labels, data.labels[..260]);
    }

    #[test]
    fn features_match_direct_pooling() {
        let data = blobs(&BlobConfig::new(2, 20, "2x4x4".parse().unwrap(), 0)).unwrap();
        let spec = NetworkSpec::new(data.shape, parse_layers("conv:3:1 relu").unwrap(), 2);
        let net = Network::new(&spec, 1).unwrap();
        let feats = probe_features(&net, &data, 2).unwrap();
        let fwd = net.forward(&data.inputs, 20).unwrap();
        assert_eq!(feats[0].1, probes::probe_features(&fwd.captures[0].batch, 2).unwrap());
    }
}
