//! Independent reference implementations shared by the integration tests and
//! the acceptance suite.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use satlab::lab::spec::parse_layers;
use satlab::lab::{Network, NetworkSpec};
use satlab::linalg::Matrix;
use satlab::probes::{softmax_cross_entropy, LogisticModel};
use satlab::rf::{Extent, LayerGeometry, LayerKind};

/// Population covariance by the textbook two-pass formula.
pub fn two_pass_covariance(rows: &[f64], d: usize) -> Matrix {
    let n = rows.len() / d;
    let mut mean = vec![0.0; d];
    for r in rows.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    Matrix::from_fn(d, d, |i, j| {
        rows.chunks_exact(d).map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / n as f64
    })
}

/// Largest entry-wise difference relative to the reference's largest entry.
pub fn relative_difference(got: &Matrix, want: &Matrix) -> f64 {
    let scale = want.max_abs().max(f64::MIN_POSITIVE);
    got.sub(want).expect("same shape").max_abs() / scale
}

/// Central finite-difference gradient of `f` at `x`.
pub fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Worst relative error between two gradients, with an absolute floor so
/// that entries which are zero in both do not divide by zero.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1e-6))
        .fold(0.0, f64::max)
}

/// Input positions (along one axis, unbounded) that influence output unit 0
/// of the stack, found by pulling an explicit index set back through every
/// layer. Returns `None` once a dense layer makes the influence global.
pub fn influence_set_1d(arch: &[LayerGeometry]) -> Option<BTreeSet<i64>> {
    let mut set: BTreeSet<i64> = BTreeSet::from([0]);
    for layer in arch.iter().rev() {
        match layer.kind {
            LayerKind::Dense => return None,
            LayerKind::Conv | LayerKind::Pool => {
                let g = layer.geometry.expect("spatial layer has geometry");
                set = set
                    .iter()
                    .flat_map(|&i| (0..g.kernel as i64).map(move |t| i * g.stride as i64 - g.padding as i64 + t))
                    .collect();
            }
            _ => {}
        }
    }
    Some(set)
}

/// Receptive field side per layer by the influence-set oracle.
pub fn influence_extents(arch: &[LayerGeometry]) -> Vec<Extent> {
    let mut global = false;
    (0..arch.len())
        .map(|l| {
            global |= arch[l].kind == LayerKind::Dense;
            if global {
                return Extent::Global;
            }
            let set = influence_set_1d(&arch[..=l]).expect("no dense layer yet");
            let span = set.last().unwrap() - set.first().unwrap() + 1;
            assert_eq!(span as usize, set.len(), "influence region has holes");
            Extent::Pixels(span as u64)
        })
        .collect()
}

/// Two-dimensional influence mask of output unit (0, 0): bounding-box side
/// lengths `(height, width)` of the input pixels that can affect it.
pub fn influence_box_2d(arch: &[LayerGeometry]) -> (u64, u64) {
    let mut set: BTreeSet<(i64, i64)> = BTreeSet::from([(0, 0)]);
    for layer in arch.iter().rev() {
        if let Some(g) = layer.geometry {
            let (k, s, p) = (g.kernel as i64, g.stride as i64, g.padding as i64);
            set = set
                .iter()
                .flat_map(|&(y, x)| (0..k).flat_map(move |ty| (0..k).map(move |tx| (y * s - p + ty, x * s - p + tx))))
                .collect();
        }
    }
    let ys: Vec<i64> = set.iter().map(|p| p.0).collect();
    let xs: Vec<i64> = set.iter().map(|p| p.1).collect();
    let side = |v: &[i64]| (v.iter().max().unwrap() - v.iter().min().unwrap() + 1) as u64;
    (side(&ys), side(&xs))
}

/// Worst relative error between backprop and central differences for a
/// random network with perturbed biases.
pub fn check_network(input: &str, layers: &str, classes: usize, n: usize, seed: u64) -> f64 {
    let spec = NetworkSpec::new(input.parse().unwrap(), parse_layers(layers).unwrap(), classes);
    let mut net = Network::new(&spec, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // non-zero biases so that relu and pooling see generic values
    for p in net.params_mut() {
        *p += rng.gen_range(-0.1..0.1);
    }
    let x: Vec<f64> = (0..n * spec.input.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..classes)).collect();
    let (_, analytic) = net.loss_and_grad(&x, &y).unwrap();
    let numeric = numeric_gradient(
        |p| {
            let mut probe = net.clone();
            probe.params_mut().copy_from_slice(p);
            probe.loss(&x, &y).unwrap()
        },
        net.params(),
        1e-6,
    );
    max_relative_error(&analytic, &numeric)
}

/// Same check for the multinomial logistic probe loss with L2.
pub fn check_probe_loss(n: usize, d: usize, k: usize, l2: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<f64> = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let mut model = LogisticModel::zeros(k, d);
    for w in model.weights.as_mut_slice() {
        *w = rng.gen_range(-0.5..0.5);
    }
    let (_, gw, gb) = softmax_cross_entropy(&model, &rows, &labels, l2);
    let mut params = model.weights.as_slice().to_vec();
    params.extend_from_slice(&model.bias);
    let numeric = numeric_gradient(
        |p| {
            let m = LogisticModel {
                weights: Matrix::new(k, d, p[..k * d].to_vec()).unwrap(),
                bias: p[k * d..].to_vec(),
            };
            softmax_cross_entropy(&m, &rows, &labels, l2).0
        },
        &params,
        1e-6,
    );
    let mut analytic = gw.as_slice().to_vec();
    analytic.extend_from_slice(&gb);
    max_relative_error(&analytic, &numeric)
}

/// One axis of a concrete network with all-one kernels, max pooling and an
/// all-zero background. Returns every layer's activations.
fn concrete_forward(arch: &[LayerGeometry], input: &[f64]) -> Vec<Vec<f64>> {
    let mut x = input.to_vec();
    let mut outs = Vec::with_capacity(arch.len());
    for layer in arch {
        if let Some(g) = layer.geometry {
            let len = (x.len() + 2 * g.padding - g.kernel) / g.stride + 1;
            let at = |i: i64| if i < 0 || i as usize >= x.len() { 0.0 } else { x[i as usize] };
            x = (0..len)
                .map(|o| {
                    let start = (o * g.stride) as i64 - g.padding as i64;
                    let window = (0..g.kernel as i64).map(|t| at(start + t));
                    match layer.kind {
                        LayerKind::Pool => window.fold(0.0, f64::max),
                        _ => window.sum(),
                    }
                })
                .collect();
        }
        outs.push(x.clone());
    }
    outs
}

/// Receptive field per layer measured on a concrete network: light up one
/// input pixel at a time and record which pixels move the middle unit of
/// each layer. The extent is the side of the bounding interval. Kernels are
/// square, so one axis determines the square field.
pub fn toggled_pixel_extents(arch: &[LayerGeometry]) -> Vec<Extent> {
    let spatial = arch.iter().take_while(|l| l.kind != LayerKind::Dense).count();
    let stack = &arch[..spatial];
    let mut len = 64;
    let extents = loop {
        let shapes: Vec<usize> = concrete_forward(stack, &vec![0.0; len]).iter().map(Vec::len).collect();
        if shapes.iter().any(|&n| n < 3) {
            len *= 2;
            continue;
        }
        let mut lo = vec![usize::MAX; spatial];
        let mut hi = vec![0; spatial];
        let mut input = vec![0.0; len];
        for pixel in 0..len {
            input[pixel] = 1.0;
            for (l, out) in concrete_forward(stack, &input).iter().enumerate() {
                if out[out.len() / 2] != 0.0 {
                    lo[l] = lo[l].min(pixel);
                    hi[l] = hi[l].max(pixel);
                }
            }
            input[pixel] = 0.0;
        }
        // The measured region must not touch the ends of the input, where
        // padding would clip it.
        if lo.iter().zip(&hi).all(|(&a, &b)| a > 0 && b + 1 < len) {
            break lo.iter().zip(&hi).map(|(a, b)| Extent::Pixels((b - a + 1) as u64)).collect::<Vec<_>>();
        }
        len *= 2;
    };
    let mut all = extents;
    all.resize(arch.len(), Extent::Global);
    all
}
