pub mod analyze;
pub mod probe;
pub mod report;
pub mod rf;
pub mod sweep;
pub mod train;

use std::path::Path;

use satlab::activation::ActivationBatch;
use satlab::format::{self, LoadedManifest};

use crate::failure::{self, Failure};
use crate::output;

/// Captured layers in manifest order, plus the manifest.
pub struct Dumps {
    pub manifest: LoadedManifest,
    pub layers: Vec<(String, ActivationBatch<f32>)>,
    /// Hash input covering the manifest and every dump it lists.
    pub digest_input: Vec<u8>,
}

pub fn load_dumps(path: &Path) -> Result<Dumps, Failure> {
    let manifest = format::read_manifest(path)?;
    let mut digest_input = output::read_input(path)?;
    let mut layers = Vec::new();
    for (name, file) in manifest.dump_paths() {
        let bytes = output::read_input(&file)?;
        let (header, batch) = format::read_dump_from(bytes.as_slice())
            .map_err(|e| failure::data(anyhow::Error::new(e).context(format!("{}", file.display()))))?;
        if header.layer_name != name {
            return Err(failure::data(anyhow::anyhow!(
                "{} holds layer {:?} but the manifest lists {:?}",
                file.display(),
                header.layer_name,
                name
            )));
        }
        digest_input.extend_from_slice(output::sha256_hex(&bytes).as_bytes());
        layers.push((name, batch));
    }
    if layers.is_empty() {
        return Err(failure::data(anyhow::anyhow!("manifest {} lists no layers", path.display())));
    }
    Ok(Dumps {
        manifest,
        layers,
        digest_input,
    })
}
