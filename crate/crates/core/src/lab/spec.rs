//! Network descriptions: an input shape, a token list of hidden layers and a
//! width multiplier. The softmax classifier is appended automatically.
//!
//! Layer tokens:
//!
//! ```text
//! dense:N            fully connected, N units
//! conv:F:K[:S[:P]]   F filters, K×K kernel, stride S (1), padding P (0)
//! maxpool:K[:S]      K×K max pooling, stride S (K)
//! relu
//! flatten
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::rf::{LayerGeometry, LayerKind};

use super::LabError;

/// Shape of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InputShape {
    Flat(usize),
    Image { channels: usize, height: usize, width: usize },
}

impl InputShape {
    pub fn len(self) -> usize {
        match self {
            InputShape::Flat(d) => d,
            InputShape::Image { channels, height, width } => channels * height * width,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    /// Channels of an image, features of a flat vector.
    pub fn channels(self) -> usize {
        match self {
            InputShape::Flat(d) => d,
            InputShape::Image { channels, .. } => channels,
        }
    }

    pub fn is_image(self) -> bool {
        matches!(self, InputShape::Image { .. })
    }
}

impl fmt::Display for InputShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputShape::Flat(d) => write!(f, "{d}"),
            InputShape::Image { channels, height, width } => write!(f, "{channels}x{height}x{width}"),
        }
    }
}

impl FromStr for InputShape {
    type Err = LabError;

    /// `D` for flat inputs, `CxHxW` for images.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LabError::InvalidSpec(format!("bad input shape {s:?}, expected D or CxHxW"));
        let parts: Vec<usize> = s
            .trim()
            .split('x')
            .map(|p| p.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let shape = match parts[..] {
            [d] => InputShape::Flat(d),
            [channels, height, width] => InputShape::Image { channels, height, width },
            _ => return Err(bad()),
        };
        if shape.is_empty() {
            return Err(bad());
        }
        Ok(shape)
    }
}

impl Serialize for InputShape {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerSpec {
    Dense { units: usize },
    Conv { filters: usize, kernel: usize, stride: usize, padding: usize },
    MaxPool { kernel: usize, stride: usize },
    Relu,
    Flatten,
}

impl LayerSpec {
    fn scaled(self, scale: WidthScale) -> Self {
        match self {
            LayerSpec::Dense { units } => LayerSpec::Dense { units: scale.apply(units) },
            LayerSpec::Conv { filters, kernel, stride, padding } => LayerSpec::Conv {
                filters: scale.apply(filters),
                kernel,
                stride,
                padding,
            },
            other => other,
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayerSpec::Dense { units } => write!(f, "dense:{units}"),
            LayerSpec::Conv { filters, kernel, stride, padding } => {
                write!(f, "conv:{filters}:{kernel}:{stride}:{padding}")
            }
            LayerSpec::MaxPool { kernel, stride } => write!(f, "maxpool:{kernel}:{stride}"),
            LayerSpec::Relu => f.write_str("relu"),
            LayerSpec::Flatten => f.write_str("flatten"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = LabError;

    fn from_str(token: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| LabError::InvalidSpec(format!("layer {token:?}: {why}"));
        let mut parts = token.split(':');
        let kind = parts.next().unwrap_or_default();
        let nums: Vec<usize> = parts
            .map(|p| p.parse::<usize>().map_err(|_| bad("arguments must be non-negative integers")))
            .collect::<Result<_, _>>()?;
        let positive = |v: usize, what: &str| if v == 0 { Err(bad(&format!("{what} must be at least 1"))) } else { Ok(v) };
        Ok(match (kind, nums.as_slice()) {
            ("dense", [units]) => LayerSpec::Dense { units: positive(*units, "units")? },
            ("conv", [f, k, rest @ ..]) if rest.len() <= 2 => LayerSpec::Conv {
                filters: positive(*f, "filters")?,
                kernel: positive(*k, "kernel")?,
                stride: positive(rest.first().copied().unwrap_or(1), "stride")?,
                padding: rest.get(1).copied().unwrap_or(0),
            },
            ("maxpool", [k, rest @ ..]) if rest.len() <= 1 => {
                let kernel = positive(*k, "kernel")?;
                LayerSpec::MaxPool {
                    kernel,
                    stride: positive(rest.first().copied().unwrap_or(kernel), "stride")?,
                }
            }
            ("relu", []) => LayerSpec::Relu,
            ("flatten", []) => LayerSpec::Flatten,
            ("dense" | "conv" | "maxpool" | "relu" | "flatten", _) => return Err(bad("wrong number of arguments")),
            _ => return Err(bad("unknown layer kind")),
        })
    }
}

/// Parses whitespace- or comma-separated layer tokens.
pub fn parse_layers(text: &str) -> Result<Vec<LayerSpec>, LabError> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

/// Width multiplier `1/divisor`, divisor in {1, 2, 4, 8, 16}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WidthScale {
    divisor: u32,
}

impl WidthScale {
    pub const ONE: WidthScale = WidthScale { divisor: 1 };
    pub const ALLOWED: [u32; 5] = [1, 2, 4, 8, 16];

    pub fn new(divisor: u32) -> Result<Self, LabError> {
        if Self::ALLOWED.contains(&divisor) {
            Ok(Self { divisor })
        } else {
            Err(LabError::InvalidSpec(format!("width scale 1/{divisor} is not one of 1, 1/2, 1/4, 1/8, 1/16")))
        }
    }

    pub fn divisor(self) -> u32 {
        self.divisor
    }

    pub fn as_f64(self) -> f64 {
        1.0 / self.divisor as f64
    }

    /// Scaled width, rounded up and never below one.
    pub fn apply(self, width: usize) -> usize {
        width.div_ceil(self.divisor as usize).max(1)
    }
}

impl Default for WidthScale {
    fn default() -> Self {
        Self::ONE
    }
}

impl fmt::Display for WidthScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.divisor == 1 {
            f.write_str("1")
        } else {
            write!(f, "1/{}", self.divisor)
        }
    }
}

impl FromStr for WidthScale {
    type Err = LabError;

    /// Accepts `1`, `1/8` or a decimal such as `0.125`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || LabError::InvalidSpec(format!("bad width scale {s:?}"));
        if let Some(d) = s.strip_prefix("1/") {
            return Self::new(d.trim().parse().map_err(|_| bad())?);
        }
        let v: f64 = s.parse().map_err(|_| bad())?;
        if !(v > 0.0) {
            return Err(bad());
        }
        let d = (1.0 / v).round();
        if (d * v - 1.0).abs() > 1e-9 || d > u32::MAX as f64 {
            return Err(bad());
        }
        Self::new(d as u32)
    }
}

impl Serialize for WidthScale {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkSpec {
    pub input: InputShape,
    pub layers: Vec<LayerSpec>,
    pub classes: usize,
    pub width_scale: WidthScale,
}

impl Serialize for LayerSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl NetworkSpec {
    pub fn new(input: InputShape, layers: Vec<LayerSpec>, classes: usize) -> Self {
        Self {
            input,
            layers,
            classes,
            width_scale: WidthScale::ONE,
        }
    }

    pub fn with_scale(mut self, scale: WidthScale) -> Self {
        self.width_scale = scale;
        self
    }

    /// Hidden layers with the width multiplier applied.
    pub fn scaled_layers(&self) -> Vec<LayerSpec> {
        self.layers.iter().map(|l| l.scaled(self.width_scale)).collect()
    }

    /// Geometry of the hidden layers for receptive-field analysis. Weight
    /// layers carry the same names as their captured outputs.
    pub fn geometry(&self) -> Vec<LayerGeometry> {
        let mut out = Vec::new();
        let mut weight_layers = 0;
        for (i, layer) in self.scaled_layers().into_iter().enumerate() {
            out.push(match layer {
                LayerSpec::Dense { units } => {
                    weight_layers += 1;
                    LayerGeometry::plain(capture_name(weight_layers, "dense"), LayerKind::Dense).with_width(units)
                }
                LayerSpec::Conv { filters, kernel, stride, padding } => {
                    weight_layers += 1;
                    LayerGeometry::conv(capture_name(weight_layers, "conv"), kernel, stride, padding).with_width(filters)
                }
                LayerSpec::MaxPool { kernel, stride } => LayerGeometry::pool(format!("pool{}", i + 1), kernel, stride),
                LayerSpec::Relu => LayerGeometry::plain(format!("relu{}", i + 1), LayerKind::Activation),
                LayerSpec::Flatten => LayerGeometry::plain(format!("flatten{}", i + 1), LayerKind::Flatten),
            });
        }
        out
    }
}

/// Name under which the output of the `index`-th (1-based) weight layer is
/// captured, e.g. `l03.conv`.
pub fn capture_name(index: usize, kind: &str) -> String {
    format!("l{index:02}.{kind}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_round_trip() {
        let text = "conv:16:3:1:1 relu maxpool:2 conv:8:5 flatten dense:32 relu";
        let layers = parse_layers(text).unwrap();
        assert_eq!(layers[0], LayerSpec::Conv { filters: 16, kernel: 3, stride: 1, padding: 1 });
        assert_eq!(layers[2], LayerSpec::MaxPool { kernel: 2, stride: 2 });
        assert_eq!(layers[3], LayerSpec::Conv { filters: 8, kernel: 5, stride: 1, padding: 0 });
        let printed: Vec<String> = layers.iter().map(|l| l.to_string()).collect();
        assert_eq!(parse_layers(&printed.join(",")).unwrap(), layers);
    }

    #[test]
    fn bad_tokens() {
        for t in ["dense", "dense:0", "conv:3", "conv:1:2:3:4:5", "pool:2", "relu:1", "dense:-1"] {
            assert!(parse_layers(t).is_err(), "{t}");
        }
    }

    #[test]
    fn scale_rounds_up_with_floor_of_one() {
        let s = WidthScale::new(16).unwrap();
        assert_eq!(s.apply(64), 4);
        assert_eq!(s.apply(10), 1);
        assert_eq!(s.apply(1), 1);
        assert_eq!(WidthScale::new(8).unwrap().apply(12), 2);
        assert!(WidthScale::new(3).is_err());
    }

    #[test]
    fn scale_parsing() {
        assert_eq!("1".parse::<WidthScale>().unwrap(), WidthScale::ONE);
        assert_eq!("1/8".parse::<WidthScale>().unwrap().divisor(), 8);
        assert_eq!("0.25".parse::<WidthScale>().unwrap().divisor(), 4);
        assert!("0.3".parse::<WidthScale>().is_err());
        assert!("1/32".parse::<WidthScale>().is_err());
        assert_eq!(WidthScale::new(2).unwrap().to_string(), "1/2");
    }

    #[test]
    fn input_shapes() {
        assert_eq!("256".parse::<InputShape>().unwrap(), InputShape::Flat(256));
        let img: InputShape = "3x32x32".parse().unwrap();
        assert_eq!(img.len(), 3072);
        assert_eq!(img.to_string(), "3x32x32");
        assert!("3x32".parse::<InputShape>().is_err());
        assert!("0".parse::<InputShape>().is_err());
    }

    #[test]
    fn geometry_names_weight_layers() {
        let spec = NetworkSpec::new(
            "1x8x8".parse().unwrap(),
            parse_layers("conv:4:3 relu maxpool:2 flatten dense:8 relu").unwrap(),
            3,
        );
        let names: Vec<String> = spec.geometry().into_iter().map(|g| g.name).collect();
        assert_eq!(names, ["l01.conv", "relu2", "pool3", "flatten4", "l02.dense", "relu6"]);
    }
}
