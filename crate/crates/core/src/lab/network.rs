//! A small sequential network with hand-written forward and backward passes.
//!
//! Activations are row-major `N×D` or `N×C×H×W` buffers of `f64`. All
//! parameters live in one flat vector so optimizers and gradient checks can
//! treat the network as a single point in parameter space.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::activation::{ActivationBatch, Layout};
use crate::kernels::{gemm_nn, gemm_nt, gemm_tn};
use crate::probes::{argmax, LayerActivations};

use super::spec::{capture_name, InputShape, LayerSpec, NetworkSpec};
use super::LabError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ConvGeom {
    channels: usize,
    height: usize,
    width: usize,
    filters: usize,
    kernel: usize,
    stride: usize,
    padding: usize,
    out_h: usize,
    out_w: usize,
}

impl ConvGeom {
    fn patch(&self) -> usize {
        self.channels * self.kernel * self.kernel
    }

    fn positions(&self) -> usize {
        self.out_h * self.out_w
    }

    /// Unfolds one `C×H×W` sample into a `(C·K·K) × (OH·OW)` matrix.
    fn im2col(&self, x: &[f64], cols: &mut [f64]) {
        let (k, p) = (self.kernel, self.positions());
        for c in 0..self.channels {
            let plane = &x[c * self.height * self.width..(c + 1) * self.height * self.width];
            for ky in 0..k {
                for kx in 0..k {
                    let row = &mut cols[((c * k + ky) * k + kx) * p..][..p];
                    for oy in 0..self.out_h {
                        let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                        let dst = &mut row[oy * self.out_w..(oy + 1) * self.out_w];
                        if iy < 0 || iy >= self.height as isize {
                            dst.fill(0.0);
                            continue;
                        }
                        let src = &plane[iy as usize * self.width..][..self.width];
                        for (ox, d) in dst.iter_mut().enumerate() {
                            let ix = (ox * self.stride + kx) as isize - self.padding as isize;
                            *d = if ix < 0 || ix >= self.width as isize { 0.0 } else { src[ix as usize] };
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`im2col`](Self::im2col): scatters columns back, summing overlaps.
    fn col2im(&self, cols: &[f64], dx: &mut [f64]) {
        let (k, p) = (self.kernel, self.positions());
        for c in 0..self.channels {
            let plane = &mut dx[c * self.height * self.width..(c + 1) * self.height * self.width];
            for ky in 0..k {
                for kx in 0..k {
                    let row = &cols[((c * k + ky) * k + kx) * p..][..p];
                    for oy in 0..self.out_h {
                        let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                        if iy < 0 || iy >= self.height as isize {
                            continue;
                        }
                        for ox in 0..self.out_w {
                            let ix = (ox * self.stride + kx) as isize - self.padding as isize;
                            if ix >= 0 && ix < self.width as isize {
                                plane[iy as usize * self.width + ix as usize] += row[oy * self.out_w + ox];
                            }
                        }
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PoolGeom {
    channels: usize,
    height: usize,
    width: usize,
    kernel: usize,
    stride: usize,
    out_h: usize,
    out_w: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Op {
    /// `w` and `b` are offsets into the parameter vector; weights are `units × inputs`.
    Dense { inputs: usize, units: usize, w: usize, b: usize },
    /// Weights are `filters × (C·K·K)`.
    Conv { geom: ConvGeom, w: usize, b: usize },
    MaxPool { geom: PoolGeom },
    Relu,
    Flatten,
}

#[derive(Debug, Clone, PartialEq)]
struct Layer {
    op: Op,
    input: InputShape,
    output: InputShape,
    capture: Option<String>,
}

/// Intermediate results of one forward pass, kept for the backward pass.
struct Trace {
    outputs: Vec<Vec<f64>>,
    /// Per max-pool layer, the winning input index of every output unit.
    argmax: Vec<Vec<u32>>,
}

/// Logits plus the captured hidden-layer outputs of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub logits: Vec<f64>,
    pub captures: Vec<LayerActivations<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
    params: Vec<f64>,
}

impl Network {
    /// Builds the network with Kaiming-uniform weights (bound `sqrt(6 / fan_in)`)
    /// and zero biases.
    pub fn new(spec: &NetworkSpec, seed: u64) -> Result<Self, LabError> {
        let mut net = Self::zeros(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &net.layers {
            let (w, count, fan_in) = match layer.op {
                Op::Dense { inputs, units, w, .. } => (w, inputs * units, inputs),
                Op::Conv { geom, w, .. } => (w, geom.filters * geom.patch(), geom.patch()),
                _ => continue,
            };
            let bound = (6.0 / fan_in as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound);
            for v in &mut net.params[w..w + count] {
                *v = dist.sample(&mut rng);
            }
        }
        Ok(net)
    }

    /// Builds the network with every parameter set to zero.
    pub fn zeros(spec: &NetworkSpec) -> Result<Self, LabError> {
        if spec.classes < 2 {
            return Err(LabError::InvalidSpec(format!("need at least 2 classes, got {}", spec.classes)));
        }
        if spec.input.is_empty() {
            return Err(LabError::InvalidSpec("input shape is empty".into()));
        }
        let mut hidden = spec.scaled_layers();
        let mut shape = spec.input;
        let mut layers = Vec::new();
        let mut n_params = 0;
        let mut weight_layers = 0;
        let n_hidden = hidden.len();
        // The classifier sees a flat vector.
        hidden.push(LayerSpec::Flatten);
        hidden.push(LayerSpec::Dense { units: spec.classes });
        for (i, ls) in hidden.into_iter().enumerate() {
            let classifier = i == n_hidden + 1;
            let bad = |why: String| LabError::InvalidSpec(format!("layer {} ({ls}): {why}", i + 1));
            let (op, output) = match (ls, shape) {
                (LayerSpec::Dense { units }, InputShape::Flat(inputs)) => {
                    let op = Op::Dense { inputs, units, w: n_params, b: n_params + inputs * units };
                    n_params += (inputs + 1) * units;
                    (op, InputShape::Flat(units))
                }
                (LayerSpec::Dense { .. }, InputShape::Image { .. }) => {
                    return Err(bad("dense layer needs a flat input; add flatten".into()))
                }
                (LayerSpec::Conv { filters, kernel, stride, padding }, InputShape::Image { channels, height, width }) => {
                    if height + 2 * padding < kernel || width + 2 * padding < kernel {
                        return Err(bad(format!("kernel larger than padded {height}x{width} input")));
                    }
                    let geom = ConvGeom {
                        channels,
                        height,
                        width,
                        filters,
                        kernel,
                        stride,
                        padding,
                        out_h: (height + 2 * padding - kernel) / stride + 1,
                        out_w: (width + 2 * padding - kernel) / stride + 1,
                    };
                    let op = Op::Conv { geom, w: n_params, b: n_params + filters * geom.patch() };
                    n_params += filters * (geom.patch() + 1);
                    (op, InputShape::Image { channels: filters, height: geom.out_h, width: geom.out_w })
                }
                (LayerSpec::MaxPool { kernel, stride }, InputShape::Image { channels, height, width }) => {
                    if height < kernel || width < kernel {
                        return Err(bad(format!("kernel larger than {height}x{width} input")));
                    }
                    let geom = PoolGeom {
                        channels,
                        height,
                        width,
                        kernel,
                        stride,
                        out_h: (height - kernel) / stride + 1,
                        out_w: (width - kernel) / stride + 1,
                    };
                    (Op::MaxPool { geom }, InputShape::Image { channels, height: geom.out_h, width: geom.out_w })
                }
                (LayerSpec::Conv { .. } | LayerSpec::MaxPool { .. }, InputShape::Flat(_)) => {
                    return Err(bad("spatial layer needs an image input".into()))
                }
                (LayerSpec::Relu, s) => (Op::Relu, s),
                (LayerSpec::Flatten, s) => {
                    if i == n_hidden && !s.is_image() {
                        // implicit flatten before the classifier is a no-op here
                        continue;
                    }
                    (Op::Flatten, InputShape::Flat(s.len()))
                }
            };
            let capture = match op {
                Op::Dense { .. } if !classifier => {
                    weight_layers += 1;
                    Some(capture_name(weight_layers, "dense"))
                }
                Op::Conv { .. } => {
                    weight_layers += 1;
                    Some(capture_name(weight_layers, "conv"))
                }
                _ => None,
            };
            layers.push(Layer { op, input: shape, output, capture });
            shape = output;
        }
        // Capture after the activation function when one directly follows.
        for i in 0..layers.len().saturating_sub(1) {
            if layers[i].capture.is_some() && layers[i + 1].op == Op::Relu {
                layers[i + 1].capture = layers[i].capture.take();
            }
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
            params: vec![0.0; n_params],
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn input_shape(&self) -> InputShape {
        self.spec.input
    }

    pub fn classes(&self) -> usize {
        self.spec.classes
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Names of the captured layers, in depth order.
    pub fn capture_names(&self) -> Vec<String> {
        self.layers.iter().filter_map(|l| l.capture.clone()).collect()
    }

    /// Output shapes of the captured layers, in depth order.
    pub fn capture_shapes(&self) -> Vec<(String, InputShape)> {
        self.layers
            .iter()
            .filter_map(|l| l.capture.clone().map(|c| (c, l.output)))
            .collect()
    }

    fn check_input(&self, x: &[f64], n: usize) -> Result<(), LabError> {
        let expected = n * self.spec.input.len();
        if x.len() != expected {
            return Err(LabError::ShapeMismatch { expected, found: x.len() });
        }
        Ok(())
    }

    fn check_labels(&self, labels: &[usize]) -> Result<(), LabError> {
        match labels.iter().find(|&&y| y >= self.spec.classes) {
            Some(&label) => Err(LabError::LabelOutOfRange { label, classes: self.spec.classes }),
            None => Ok(()),
        }
    }

    fn run(&self, x: &[f64], n: usize) -> Trace {
        let mut outputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut argmax = Vec::new();
        for layer in &self.layers {
            let input: &[f64] = outputs.last().map_or(x, |v| v.as_slice());
            let out = match layer.op {
                Op::Dense { inputs, units, w, b } => {
                    let mut out = Vec::with_capacity(n * units);
                    for _ in 0..n {
                        out.extend_from_slice(&self.params[b..b + units]);
                    }
                    gemm_nt(n, inputs, units, input, &self.params[w..w + inputs * units], 1.0, &mut out);
                    out
                }
                Op::Conv { geom, w, b } => {
                    let (f, patch, p) = (geom.filters, geom.patch(), geom.positions());
                    let in_len = layer.input.len();
                    let mut out = vec![0.0; n * f * p];
                    let mut cols = vec![0.0; patch * p];
                    let weights = &self.params[w..w + f * patch];
                    for s in 0..n {
                        geom.im2col(&input[s * in_len..(s + 1) * in_len], &mut cols);
                        let y = &mut out[s * f * p..(s + 1) * f * p];
                        for (row, &bias) in y.chunks_exact_mut(p).zip(&self.params[b..b + f]) {
                            row.fill(bias);
                        }
                        gemm_nn(f, patch, p, weights, &cols, 1.0, y);
                    }
                    out
                }
                Op::MaxPool { geom } => {
                    let (out, idx) = maxpool_forward(&geom, input, n);
                    argmax.push(idx);
                    out
                }
                Op::Relu => input.iter().map(|&v| v.max(0.0)).collect(),
                Op::Flatten => input.to_vec(),
            };
            outputs.push(out);
        }
        Trace { outputs, argmax }
    }

    pub fn logits(&self, x: &[f64], n: usize) -> Result<Vec<f64>, LabError> {
        self.check_input(x, n)?;
        Ok(self.run(x, n).outputs.pop().expect("classifier layer exists"))
    }

    /// Forward pass that also returns every captured hidden-layer output.
    pub fn forward(&self, x: &[f64], n: usize) -> Result<Forward, LabError> {
        self.check_input(x, n)?;
        let mut trace = self.run(x, n);
        let mut captures = Vec::new();
        for (layer, out) in self.layers.iter().zip(trace.outputs.iter_mut()) {
            if let Some(name) = &layer.capture {
                let layout = match layer.output {
                    InputShape::Flat(features) => Layout::Flat { samples: n, features },
                    InputShape::Image { channels, height, width } => Layout::Spatial { samples: n, channels, height, width },
                };
                let batch = ActivationBatch::new(layout, std::mem::take(out)).expect("shape tracked per layer");
                captures.push(LayerActivations { name: name.clone(), batch });
            }
        }
        let logits = trace.outputs.pop().expect("classifier layer exists");
        Ok(Forward { logits, captures })
    }

    /// Mean softmax cross-entropy over the batch.
    pub fn loss(&self, x: &[f64], labels: &[usize]) -> Result<f64, LabError> {
        self.check_labels(labels)?;
        let logits = self.logits(x, labels.len())?;
        Ok(softmax_cross_entropy(&logits, labels, self.spec.classes).0)
    }

    /// Mean softmax cross-entropy and its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, x: &[f64], labels: &[usize]) -> Result<(f64, Vec<f64>), LabError> {
        let n = labels.len();
        self.check_input(x, n)?;
        self.check_labels(labels)?;
        let trace = self.run(x, n);
        let (loss, dlogits) = softmax_cross_entropy(trace.outputs.last().expect("classifier"), labels, self.spec.classes);
        Ok((loss, self.backward(x, n, &trace, dlogits)))
    }

    fn backward(&self, x: &[f64], n: usize, trace: &Trace, dlogits: Vec<f64>) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let mut dy = dlogits;
        let mut pool_idx = trace.argmax.len();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input: &[f64] = if i == 0 { x } else { &trace.outputs[i - 1] };
            let need_dx = i > 0;
            dy = match layer.op {
                Op::Dense { inputs, units, w, b } => {
                    gemm_tn(units, n, inputs, &dy, input, 0.0, &mut grad[w..w + inputs * units]);
                    for row in dy.chunks_exact(units) {
                        for (g, d) in grad[b..b + units].iter_mut().zip(row) {
                            *g += d;
                        }
                    }
                    if !need_dx {
                        break;
                    }
                    let mut dx = vec![0.0; n * inputs];
                    gemm_nn(n, units, inputs, &dy, &self.params[w..w + inputs * units], 0.0, &mut dx);
                    dx
                }
                Op::Conv { geom, w, b } => {
                    let (f, patch, p) = (geom.filters, geom.patch(), geom.positions());
                    let in_len = layer.input.len();
                    let weights = &self.params[w..w + f * patch];
                    let mut cols = vec![0.0; patch * p];
                    let mut dcols = vec![0.0; if need_dx { patch * p } else { 0 }];
                    let mut dx = vec![0.0; if need_dx { n * in_len } else { 0 }];
                    let (gw, gb) = grad[w..b + f].split_at_mut(f * patch);
                    for s in 0..n {
                        let dys = &dy[s * f * p..(s + 1) * f * p];
                        geom.im2col(&input[s * in_len..(s + 1) * in_len], &mut cols);
                        gemm_nt(f, p, patch, dys, &cols, 1.0, gw);
                        for (g, row) in gb.iter_mut().zip(dys.chunks_exact(p)) {
                            *g += row.iter().sum::<f64>();
                        }
                        if need_dx {
                            gemm_tn(patch, f, p, weights, dys, 0.0, &mut dcols);
                            geom.col2im(&dcols, &mut dx[s * in_len..(s + 1) * in_len]);
                        }
                    }
                    if !need_dx {
                        break;
                    }
                    dx
                }
                Op::MaxPool { .. } => {
                    pool_idx -= 1;
                    let idx = &trace.argmax[pool_idx];
                    let in_len = layer.input.len();
                    let out_len = layer.output.len();
                    let mut dx = vec![0.0; n * in_len];
                    for s in 0..n {
                        let dxs = &mut dx[s * in_len..(s + 1) * in_len];
                        for (d, &j) in dy[s * out_len..(s + 1) * out_len].iter().zip(&idx[s * out_len..(s + 1) * out_len]) {
                            dxs[j as usize] += d;
                        }
                    }
                    dx
                }
                Op::Relu => {
                    let out = &trace.outputs[i];
                    dy.iter().zip(out).map(|(&d, &o)| if o > 0.0 { d } else { 0.0 }).collect()
                }
                Op::Flatten => dy,
            };
        }
        grad
    }

    /// Predicted class per sample (first index wins ties).
    pub fn predict(&self, x: &[f64], n: usize) -> Result<Vec<usize>, LabError> {
        Ok(self.logits(x, n)?.chunks_exact(self.spec.classes).map(argmax).collect())
    }
}

fn maxpool_forward(g: &PoolGeom, x: &[f64], n: usize) -> (Vec<f64>, Vec<u32>) {
    let in_len = g.channels * g.height * g.width;
    let out_len = g.channels * g.out_h * g.out_w;
    let mut out = Vec::with_capacity(n * out_len);
    let mut idx = Vec::with_capacity(n * out_len);
    for s in 0..n {
        let xs = &x[s * in_len..(s + 1) * in_len];
        for c in 0..g.channels {
            let base = c * g.height * g.width;
            for oy in 0..g.out_h {
                for ox in 0..g.out_w {
                    let mut best = base + oy * g.stride * g.width + ox * g.stride;
                    for ky in 0..g.kernel {
                        for kx in 0..g.kernel {
                            let j = base + (oy * g.stride + ky) * g.width + ox * g.stride + kx;
                            if xs[j] > xs[best] {
                                best = j;
                            }
                        }
                    }
                    out.push(xs[best]);
                    idx.push(best as u32);
                }
            }
        }
    }
    (out, idx)
}

/// Mean softmax cross-entropy of `logits` (`n × classes`) and its gradient
/// with respect to the logits.
pub fn softmax_cross_entropy(logits: &[f64], labels: &[usize], classes: usize) -> (f64, Vec<f64>) {
    let n = labels.len();
    let mut grad = logits.to_vec();
    let mut loss = 0.0;
    for (row, &y) in grad.chunks_exact_mut(classes).zip(labels) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            z += *v;
        }
        loss += z.ln() - (row[y]).ln();
        for v in row.iter_mut() {
            *v /= z * n as f64;
        }
        row[y] -= 1.0 / n as f64;
    }
    (loss / n as f64, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lab::spec::parse_layers;

    fn spec(input: &str, layers: &str, classes: usize) -> NetworkSpec {
        NetworkSpec::new(input.parse().unwrap(), parse_layers(layers).unwrap(), classes)
    }

    #[test]
    fn zero_network_is_uniform() {
        let net = Network::zeros(&spec("5", "dense:4 relu", 4)).unwrap();
        let x = vec![0.3; 10];
        let logits = net.logits(&x, 2).unwrap();
        assert!(logits.iter().all(|&v| v == 0.0));
        let loss = net.loss(&x, &[0, 3]).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn identity_classifier_passes_inputs_through() {
        let mut net = Network::zeros(&spec("3", "", 3)).unwrap();
        for i in 0..3 {
            net.params_mut()[i * 3 + i] = 1.0;
        }
        let x = [0.5, -1.0, 2.0, 3.0, 0.0, -0.25];
        assert_eq!(net.logits(&x, 2).unwrap(), x);
    }

    #[test]
    fn capture_follows_activation() {
        let net = Network::new(&spec("1x6x6", "conv:2:3 relu maxpool:2 conv:3:1 flatten dense:4 relu", 2), 0).unwrap();
        assert_eq!(net.capture_names(), ["l01.conv", "l02.conv", "l03.dense"]);
        let x = vec![1.0; 2 * 36];
        let fwd = net.forward(&x, 2).unwrap();
        assert_eq!(fwd.captures.len(), 3);
        assert_eq!(fwd.captures[0].batch.layout(), Layout::Spatial { samples: 2, channels: 2, height: 4, width: 4 });
        assert!(fwd.captures[0].batch.data().iter().all(|&v| v >= 0.0));
        assert_eq!(fwd.captures[1].batch.layout(), Layout::Spatial { samples: 2, channels: 3, height: 2, width: 2 });
        assert_eq!(fwd.captures[2].batch.layout(), Layout::Flat { samples: 2, features: 4 });
        assert_eq!(fwd.logits, net.logits(&x, 2).unwrap());
    }

    #[test]
    fn parameter_count() {
        let net = Network::zeros(&spec("3x8x8", "conv:4:3:1:1 relu maxpool:2 flatten dense:5", 10)).unwrap();
        assert_eq!(net.param_count(), 4 * 27 + 4 + (64 * 5 + 5) + (5 * 10 + 10));
    }

    #[test]
    fn bad_specs() {
        assert!(Network::zeros(&spec("3x8x8", "dense:4", 2)).is_err());
        assert!(Network::zeros(&spec("16", "conv:4:3", 2)).is_err());
        assert!(Network::zeros(&spec("1x2x2", "conv:4:3", 2)).is_err());
        assert!(Network::zeros(&spec("4", "dense:4", 1)).is_err());
        let net = Network::zeros(&spec("4", "dense:4", 2)).unwrap();
        assert!(matches!(net.logits(&[0.0; 7], 2), Err(LabError::ShapeMismatch { .. })));
        assert!(matches!(net.loss(&[0.0; 4], &[2]), Err(LabError::LabelOutOfRange { .. })));
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let s = spec("10", "dense:20 relu", 3);
        let a = Network::new(&s, 4).unwrap();
        assert_eq!(a, Network::new(&s, 4).unwrap());
        assert_ne!(a, Network::new(&s, 5).unwrap());
        let bound = (6.0f64 / 10.0).sqrt();
        assert!(a.params()[..200].iter().all(|v| v.abs() <= bound));
        assert!(a.params()[200..220].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicated_sample_has_the_single_sample_gradient() {
        let net = Network::new(&spec("4", "dense:6 relu", 3), 1).unwrap();
        let x = [0.1, -0.4, 0.7, 0.2];
        let (l1, g1) = net.loss_and_grad(&x, &[2]).unwrap();
        let xx: Vec<f64> = x.iter().chain(&x).copied().collect();
        let (l2, g2) = net.loss_and_grad(&xx, &[2, 2]).unwrap();
        assert!((l1 - l2).abs() < 1e-15);
        assert!(g1.iter().zip(&g2).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn confident_correct_predictions_have_no_gradient() {
        let mut net = Network::zeros(&spec("2", "", 2)).unwrap();
        net.params_mut()[..4].copy_from_slice(&[40.0, 0.0, 0.0, 40.0]);
        let (_, g) = net.loss_and_grad(&[1.0, 0.0, 0.0, 1.0], &[0, 1]).unwrap();
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-6);
    }

    #[test]
    fn pooling_routes_to_first_maximum() {
        let g = PoolGeom { channels: 1, height: 2, width: 4, kernel: 2, stride: 2, out_h: 1, out_w: 2 };
        let (out, idx) = maxpool_forward(&g, &[1.0, 3.0, 5.0, 5.0, 3.0, 0.0, 5.0, 5.0], 1);
        assert_eq!(out, [3.0, 5.0]);
        assert_eq!(idx, [1, 2]);
    }
}
