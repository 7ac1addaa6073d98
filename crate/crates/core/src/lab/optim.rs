//! SGD with optional momentum, Adam, and step learning-rate decay.

use serde::Serialize;

use super::LabError;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd { momentum: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl OptimizerKind {
    pub fn sgd() -> Self {
        OptimizerKind::Sgd { momentum: 0.0 }
    }

    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: ADAM_BETA1,
            beta2: ADAM_BETA2,
            epsilon: ADAM_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<(), LabError> {
        let ok = match *self {
            OptimizerKind::Sgd { momentum } => (0.0..1.0).contains(&momentum),
            OptimizerKind::Adam { beta1, beta2, epsilon } => {
                (0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && epsilon > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(LabError::InvalidConfig(format!("optimizer parameters out of range: {self:?}")))
        }
    }
}

/// `p ← p − lr · v` with `v ← momentum · v + g`.
pub fn sgd_step(params: &mut [f64], grads: &[f64], velocity: &mut [f64], lr: f64, momentum: f64) {
    if momentum == 0.0 {
        for (p, g) in params.iter_mut().zip(grads) {
            *p -= lr * g;
        }
        return;
    }
    for ((p, g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + g;
        *p -= lr * *v;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64, beta1: f64, beta2: f64, epsilon: f64) {
    state.t += 1;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    for (((p, g), m), v) in params.iter_mut().zip(grads).zip(state.m.iter_mut()).zip(state.v.iter_mut()) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
    }
}

/// Optimizer together with its per-parameter state.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    velocity: Vec<f64>,
    adam: AdamState,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, len: usize) -> Self {
        let (velocity, adam) = match kind {
            OptimizerKind::Sgd { momentum } if momentum != 0.0 => (vec![0.0; len], AdamState::new(0)),
            OptimizerKind::Sgd { .. } => (Vec::new(), AdamState::new(0)),
            OptimizerKind::Adam { .. } => (Vec::new(), AdamState::new(len)),
        };
        Self { kind, velocity, adam }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        match self.kind {
            OptimizerKind::Sgd { momentum } => sgd_step(params, grads, &mut self.velocity, lr, momentum),
            OptimizerKind::Adam { beta1, beta2, epsilon } => {
                adam_step(params, grads, &mut self.adam, lr, beta1, beta2, epsilon)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LrSchedule {
    #[default]
    None,
    /// Multiply by `factor` every `every` epochs.
    Step { every: usize, factor: f64 },
}

impl LrSchedule {
    pub fn validate(&self) -> Result<(), LabError> {
        match *self {
            LrSchedule::Step { every, factor } if every == 0 || !(factor > 0.0 && factor <= 1.0) => Err(
                LabError::InvalidConfig(format!("lr_decay needs every >= 1 and factor in (0, 1], got {every}, {factor}")),
            ),
            _ => Ok(()),
        }
    }

    /// Learning rate in effect during `epoch` (1-based).
    pub fn rate(&self, base: f64, epoch: usize) -> f64 {
        match *self {
            LrSchedule::None => base,
            LrSchedule::Step { every, factor } => base * factor.powi((epoch.saturating_sub(1) / every) as i32),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sgd_by_hand() {
        let mut p = [1.0];
        sgd_step(&mut p, &[0.5], &mut [], 0.1, 0.0);
        assert!((p[0] - 0.95).abs() < 1e-15);
        let mut p = [1.0];
        let mut v = [0.0];
        sgd_step(&mut p, &[1.0], &mut v, 0.1, 0.9);
        sgd_step(&mut p, &[1.0], &mut v, 0.1, 0.9);
        assert!((p[0] - (1.0 - 0.1 - 0.19)).abs() < 1e-15);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        for g in [1e-3, 0.5, -7.0, 1e4] {
            let mut p = [2.0];
            let mut st = AdamState::new(1);
            adam_step(&mut p, &[g], &mut st, 0.01, ADAM_BETA1, ADAM_BETA2, ADAM_EPSILON);
            let step = 2.0 - p[0];
            // m̂ = g and v̂ = g², so the step is lr · g / (|g| + ε).
            let expected = 0.01 * g / (g.abs() + ADAM_EPSILON);
            assert!((step - expected).abs() < 1e-15, "{g}");
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = [0.3, -1.2];
        let mut opt = Optimizer::new(OptimizerKind::adam(), 2);
        opt.step(&mut p, &[0.0, 0.0], 0.1);
        assert_eq!(p, [0.3, -1.2]);
        let mut opt = Optimizer::new(OptimizerKind::sgd(), 2);
        opt.step(&mut p, &[0.0, 0.0], 0.1);
        assert_eq!(p, [0.3, -1.2]);
    }

    #[test]
    fn step_decay() {
        let s = LrSchedule::Step { every: 10, factor: 0.1 };
        assert_eq!(s.rate(0.1, 1), 0.1);
        assert_eq!(s.rate(0.1, 10), 0.1);
        assert!((s.rate(0.1, 11) - 0.01).abs() < 1e-15);
        assert!((s.rate(0.1, 21) - 0.001).abs() < 1e-15);
        assert_eq!(LrSchedule::None.rate(0.1, 50), 0.1);
        assert!(LrSchedule::Step { every: 0, factor: 0.5 }.validate().is_err());
        assert!(LrSchedule::Step { every: 2, factor: 1.5 }.validate().is_err());
    }
}
