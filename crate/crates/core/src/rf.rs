//! Receptive fields of sequential networks and border-layer prediction.
//!
//! Starting from `r = 1, j = 1` at the input, every convolution or pooling
//! layer with kernel `k` and stride `s` maps `r ← r + (k − 1)·j`, `j ← j·s`.
//! Padding shifts where a unit looks, not how much it sees, so it does not
//! enter the recursion. Dense layers see the whole input.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RfError {
    #[error("ill-formed architecture at layer {index} ({name}): {reason}")]
    IllFormedArchitecture {
        index: usize,
        name: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Conv,
    Pool,
    Dense,
    Flatten,
    Activation,
    Norm,
}

impl LayerKind {
    pub fn is_spatial(self) -> bool {
        matches!(self, LayerKind::Conv | LayerKind::Pool)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LayerKind::Conv => "conv",
            LayerKind::Pool => "pool",
            LayerKind::Dense => "dense",
            LayerKind::Flatten => "flatten",
            LayerKind::Activation => "activation",
            LayerKind::Norm => "norm",
        }
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

/// One layer of a sequential architecture as far as spatial extent goes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerGeometry {
    pub name: String,
    pub kind: LayerKind,
    /// Present exactly for convolution and pooling layers.
    pub geometry: Option<Geometry>,
    /// Filter or unit count, when the description carries one.
    pub width: Option<usize>,
}

impl LayerGeometry {
    pub fn conv(name: impl Into<String>, kernel: usize, stride: usize, padding: usize) -> Self {
        Self::spatial(name, LayerKind::Conv, kernel, stride, padding)
    }

    pub fn pool(name: impl Into<String>, kernel: usize, stride: usize) -> Self {
        Self::spatial(name, LayerKind::Pool, kernel, stride, 0)
    }

    fn spatial(name: impl Into<String>, kind: LayerKind, kernel: usize, stride: usize, padding: usize) -> Self {
        Self {
            name: name.into(),
            kind,
            geometry: Some(Geometry {
                kernel,
                stride,
                padding,
            }),
            width: None,
        }
    }

    /// A layer without spatial geometry (dense, flatten, activation, norm).
    pub fn plain(name: impl Into<String>, kind: LayerKind) -> Self {
        Self {
            name: name.into(),
            kind,
            geometry: None,
            width: None,
        }
    }

    pub fn with_width(mut self, width: usize) -> Self {
        self.width = Some(width);
        self
    }
}

/// Side length of the input region feeding one unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extent {
    Pixels(u64),
    /// Dense layers: every input pixel contributes.
    Global,
}

impl Extent {
    pub fn exceeds(self, resolution: u64) -> bool {
        match self {
            Extent::Pixels(p) => p > resolution,
            Extent::Global => true,
        }
    }

    pub fn pixels(self) -> Option<u64> {
        match self {
            Extent::Pixels(p) => Some(p),
            Extent::Global => None,
        }
    }
}

impl fmt::Display for Extent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extent::Pixels(p) => write!(f, "{p}"),
            Extent::Global => f.write_str("global"),
        }
    }
}

impl Serialize for Extent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Extent::Pixels(p) => s.serialize_u64(*p),
            Extent::Global => s.serialize_str("global"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReceptiveFieldInfo {
    pub layer: String,
    pub kind: LayerKind,
    pub rf: Extent,
    /// Product of all strides so far: input pixels between adjacent units.
    pub jump: u64,
    pub is_border: bool,
}

/// Receptive field and jump after every layer. `is_border` is left unset;
/// see [`analyze`].
pub fn receptive_fields(arch: &[LayerGeometry]) -> Result<Vec<ReceptiveFieldInfo>, RfError> {
    let ill = |index: usize, layer: &LayerGeometry, reason: &str| RfError::IllFormedArchitecture {
        index,
        name: layer.name.clone(),
        reason: reason.to_string(),
    };
    if arch.is_empty() {
        return Err(RfError::IllFormedArchitecture {
            index: 0,
            name: String::new(),
            reason: "architecture has no layers".into(),
        });
    }
    let mut rf = Extent::Pixels(1);
    let mut jump: u64 = 1;
    let mut seen_dense = false;
    let mut out = Vec::with_capacity(arch.len());
    for (index, layer) in arch.iter().enumerate() {
        match (layer.kind.is_spatial(), layer.geometry) {
            (true, None) => return Err(ill(index, layer, "spatial layer without kernel/stride")),
            (false, Some(_)) => return Err(ill(index, layer, "non-spatial layer carries geometry")),
            (true, Some(g)) => {
                if seen_dense {
                    return Err(ill(index, layer, "spatial layer after a dense layer"));
                }
                if g.kernel == 0 || g.stride == 0 {
                    return Err(ill(index, layer, "kernel and stride must be at least 1"));
                }
                let Extent::Pixels(r) = rf else {
                    unreachable!("global extent only follows dense layers")
                };
                rf = Extent::Pixels(r + (g.kernel as u64 - 1) * jump);
                jump *= g.stride as u64;
            }
            (false, None) => {
                if layer.kind == LayerKind::Dense {
                    seen_dense = true;
                    rf = Extent::Global;
                }
            }
        }
        out.push(ReceptiveFieldInfo {
            layer: layer.name.clone(),
            kind: layer.kind,
            rf,
            jump,
            is_border: false,
        });
    }
    Ok(out)
}

/// Index of the first layer whose receptive field is strictly larger than
/// the input resolution.
pub fn border_layer(rfs: &[ReceptiveFieldInfo], input_resolution: u64) -> Option<usize> {
    rfs.iter().position(|info| info.rf.exceeds(input_resolution))
}

/// Receptive fields with the border layer flagged.
pub fn analyze(arch: &[LayerGeometry], input_resolution: u64) -> Result<Vec<ReceptiveFieldInfo>, RfError> {
    let mut rfs = receptive_fields(arch)?;
    if let Some(b) = border_layer(&rfs, input_resolution) {
        rfs[b].is_border = true;
    }
    Ok(rfs)
}

/// Convolution and pooling layers at or after the border layer.
pub fn predict_unproductive(arch: &[LayerGeometry], input_resolution: u64) -> Result<Vec<String>, RfError> {
    let rfs = receptive_fields(arch)?;
    let Some(border) = border_layer(&rfs, input_resolution) else {
        return Ok(Vec::new());
    };
    Ok(arch[border..]
        .iter()
        .filter(|l| l.kind.is_spatial())
        .map(|l| l.name.clone())
        .collect())
}

/// Sequential VGG-style geometry: `cfg` lists filter counts with `0` marking
/// a 2×2 max-pool. Convs are 3×3, stride 1, padding 1.
pub fn vgg_geometry(cfg: &[usize]) -> Vec<LayerGeometry> {
    let mut conv = 0;
    let mut pool = 0;
    let mut out = Vec::new();
    for &c in cfg {
        if c == 0 {
            pool += 1;
            out.push(LayerGeometry::pool(format!("pool{pool}"), 2, 2));
        } else {
            conv += 1;
            out.push(LayerGeometry::conv(format!("conv{conv}"), 3, 1, 1).with_width(c));
        }
    }
    out
}

pub const VGG11: &[usize] = &[64, 0, 128, 0, 256, 256, 0, 512, 512, 0, 512, 512, 0];
pub const VGG13: &[usize] = &[64, 64, 0, 128, 128, 0, 256, 256, 0, 512, 512, 0, 512, 512, 0];
pub const VGG16: &[usize] = &[
    64, 64, 0, 128, 128, 0, 256, 256, 256, 0, 512, 512, 512, 0, 512, 512, 512, 0,
];
pub const VGG19: &[usize] = &[
    64, 64, 0, 128, 128, 0, 256, 256, 256, 256, 0, 512, 512, 512, 512, 0, 512, 512, 512, 512, 0,
];
