//! Capture manifests: the JSON index listing dump files in layer order.
//!
//! The manifest is written last, so its presence marks a finished capture.
//! File paths inside it are relative to the manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::FormatError;

pub const MANIFEST_FORMAT: &str = "SATD";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u16,
    /// `post-activation` or `pre-activation`.
    pub capture: String,
    /// Labels file aligned with the dumped samples, if one was written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<String>,
    pub layers: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(capture: impl Into<String>) -> Self {
        Self {
            format: MANIFEST_FORMAT.to_string(),
            version: super::dump::DUMP_VERSION,
            capture: capture.into(),
            labels: None,
            layers: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, file: impl Into<String>, kind: Option<String>) {
        self.layers.push(ManifestEntry {
            name: name.into(),
            file: file.into(),
            kind,
        });
    }

    fn validate(&self) -> Result<(), FormatError> {
        if self.format != MANIFEST_FORMAT {
            return Err(FormatError::Manifest(format!("format must be {MANIFEST_FORMAT:?}, got {:?}", self.format)));
        }
        if self.version != super::dump::DUMP_VERSION {
            return Err(FormatError::UnsupportedVersion(self.version));
        }
        Ok(())
    }
}

/// A manifest together with the directory its paths are relative to.
#[derive(Debug, Clone)]
pub struct LoadedManifest {
    pub manifest: Manifest,
    pub base_dir: PathBuf,
}

impl LoadedManifest {
    pub fn dump_paths(&self) -> Vec<(String, PathBuf)> {
        self.manifest
            .layers
            .iter()
            .map(|e| (e.name.clone(), self.base_dir.join(&e.file)))
            .collect()
    }

    pub fn labels_path(&self) -> Option<PathBuf> {
        self.manifest.labels.as_ref().map(|l| self.base_dir.join(l))
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<LoadedManifest, FormatError> {
    let path = path.as_ref();
    let manifest: Manifest = serde_json::from_slice(&fs::read(path)?)?;
    manifest.validate()?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedManifest { manifest, base_dir })
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &Manifest) -> Result<(), FormatError> {
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

/// Labels file: one class index per line.
pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>, FormatError> {
    parse_labels(&fs::read_to_string(path)?)
}

pub fn parse_labels(text: &str) -> Result<Vec<usize>, FormatError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| FormatError::Parse {
                line: i + 1,
                message: format!("expected a class index, got {l:?}"),
            })
        })
        .collect()
}

pub fn write_labels(path: impl AsRef<Path>, labels: &[usize]) -> Result<(), FormatError> {
    let mut text = String::with_capacity(labels.len() * 3);
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::new("post-activation");
        m.labels = Some("labels.txt".into());
        m.push("conv1", "000_conv1.satd", Some("conv".into()));
        m.push("fc1", "001_fc1.satd", None);
        let path = dir.path().join("manifest.json");
        write_manifest(&path, &m).unwrap();
        let loaded = read_manifest(&path).unwrap();
        assert_eq!(loaded.manifest, m);
        assert_eq!(loaded.dump_paths()[1].1, dir.path().join("001_fc1.satd"));
        assert_eq!(loaded.labels_path().unwrap(), dir.path().join("labels.txt"));
    }

    #[test]
    fn rejects_foreign_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        fs::write(&path, r#"{"format":"NPY","version":1,"capture":"x","layers":[]}"#).unwrap();
        assert!(matches!(read_manifest(&path), Err(FormatError::Manifest(_))));
    }

    #[test]
    fn labels_text() {
        assert_eq!(parse_labels("1\n0\n\n9\n").unwrap(), vec![1, 0, 9]);
        assert!(matches!(parse_labels("1\n-2\n"), Err(FormatError::Parse { line: 2, .. })));
    }
}
