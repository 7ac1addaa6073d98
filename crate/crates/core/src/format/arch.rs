//! Plain-text architecture descriptions, one layer per line:
//!
//! ```text
//! # VGG-style block
//! conv1 conv kernel=3 stride=1 padding=1 filters=64
//! pool1 pool kernel=2 stride=2
//! fc1   dense units=512
//! ```
//!
//! `#` starts a comment. Convolutions default to stride 1, pools to a stride
//! equal to their kernel; padding defaults to 0.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::rf::{Geometry, LayerGeometry, LayerKind};

use super::FormatError;

fn parse_kind(word: &str) -> Option<LayerKind> {
    Some(match word {
        "conv" => LayerKind::Conv,
        "pool" | "maxpool" | "avgpool" => LayerKind::Pool,
        "dense" | "fc" | "linear" => LayerKind::Dense,
        "flatten" => LayerKind::Flatten,
        "activation" | "relu" => LayerKind::Activation,
        "norm" | "batchnorm" => LayerKind::Norm,
        _ => return None,
    })
}

pub fn parse_architecture(text: &str) -> Result<Vec<LayerGeometry>, FormatError> {
    let mut layers = Vec::new();
    let mut names = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parse_err = |message: String| FormatError::Parse { line, message };
        let mut words = content.split_whitespace();
        let name = words.next().expect("non-empty line has a first word");
        let kind_word = words
            .next()
            .ok_or_else(|| parse_err(format!("layer {name:?} has no kind")))?;
        let kind = parse_kind(kind_word).ok_or_else(|| FormatError::UnknownKind {
            line,
            kind: kind_word.to_string(),
        })?;
        if !names.insert(name.to_string()) {
            return Err(parse_err(format!("duplicate layer name {name:?}")));
        }

        let (mut kernel, mut stride, mut padding, mut width) = (None, None, None, None);
        for pair in words {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got {pair:?}")))?;
            let value: usize = value
                .parse()
                .map_err(|_| parse_err(format!("{key} must be a non-negative integer, got {value:?}")))?;
            let slot = match (key, kind) {
                ("kernel", LayerKind::Conv | LayerKind::Pool) => &mut kernel,
                ("stride", LayerKind::Conv | LayerKind::Pool) => &mut stride,
                ("padding", LayerKind::Conv | LayerKind::Pool) => &mut padding,
                ("filters", LayerKind::Conv) | ("units", LayerKind::Dense) => &mut width,
                _ => return Err(parse_err(format!("key {key:?} is not valid for a {kind} layer"))),
            };
            if slot.replace(value).is_some() {
                return Err(parse_err(format!("key {key:?} given twice")));
            }
        }

        let geometry = if kind.is_spatial() {
            let kernel = kernel.ok_or(FormatError::MissingField { line, field: "kernel" })?;
            let stride = stride.unwrap_or(if kind == LayerKind::Pool { kernel } else { 1 });
            if kernel == 0 || stride == 0 {
                return Err(parse_err("kernel and stride must be at least 1".into()));
            }
            Some(Geometry {
                kernel,
                stride,
                padding: padding.unwrap_or(0),
            })
        } else {
            None
        };
        layers.push(LayerGeometry {
            name: name.to_string(),
            kind,
            geometry,
            width,
        });
    }
    if layers.is_empty() {
        return Err(FormatError::EmptyArchitecture);
    }
    Ok(layers)
}

/// Inverse of [`parse_architecture`], with every key spelled out.
pub fn write_architecture(layers: &[LayerGeometry]) -> String {
    let mut out = String::new();
    for l in layers {
        let _ = write!(out, "{} {}", l.name, l.kind);
        if let Some(g) = l.geometry {
            let _ = write!(out, " kernel={} stride={} padding={}", g.kernel, g.stride, g.padding);
        }
        if let Some(w) = l.width {
            let key = if l.kind == LayerKind::Dense { "units" } else { "filters" };
            let _ = write!(out, " {key}={w}");
        }
        out.push('\n');
    }
    out
}
