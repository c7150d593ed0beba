use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    /// Weight decay, if any, is added to the gradient.
    Adam,
    /// Decoupled weight decay.
    AdamW,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant,
    /// `lr * (1 + cos(pi * t / horizon)) / 2`.
    CosineDecay,
}

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

pub fn scheduled_lr(base: f64, schedule: Schedule, iteration: usize, horizon: usize) -> f64 {
    match schedule {
        Schedule::Constant => base,
        Schedule::CosineDecay => {
            let frac = if horizon == 0 {
                1.0
            } else {
                (iteration as f64 / horizon as f64).min(1.0)
            };
            base * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub kind: OptimizerKind,
    pub weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(kind: OptimizerKind, params: usize, weight_decay: f64) -> Self {
        Self {
            kind,
            weight_decay,
            m: vec![0.0; params],
            v: vec![0.0; params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        check_len("optimizer parameters", self.m.len(), params.len())?;
        check_len("optimizer gradients", self.m.len(), grads.len())?;
        if let Some(i) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient {
                name: format!("flat index {i}"),
            });
        }
        self.t += 1;
        let bc1 = 1.0 - BETA1.powi(self.t as i32);
        let bc2 = 1.0 - BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            let mut g = grads[i];
            match self.kind {
                OptimizerKind::Adam => g += self.weight_decay * params[i],
                OptimizerKind::AdamW => params[i] -= lr * self.weight_decay * params[i],
            }
            self.m[i] = BETA1 * self.m[i] + (1.0 - BETA1) * g;
            self.v[i] = BETA2 * self.v[i] + (1.0 - BETA2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
        }
        Ok(())
    }
}

/// Rescales `grads` in place so its Euclidean norm is at most `max_norm`.
pub fn clip_by_norm(grads: &mut [f64], max_norm: f64) {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut opt = Adam::new(OptimizerKind::Adam, 3, 0.0);
        let mut p = vec![1.0, -2.0, 0.5];
        opt.step(&mut p, &[0.0; 3], 1e-3).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        // m_hat = 1, v_hat = 1 -> delta = lr / (1 + eps)
        let mut opt = Adam::new(OptimizerKind::Adam, 1, 0.0);
        let mut p = vec![0.0];
        opt.step(&mut p, &[1.0], 1e-3).unwrap();
        assert!((p[0] + 1e-3 / (1.0 + 1e-8)).abs() < 1e-18);
    }

    #[test]
    fn adamw_decouples_decay() {
        let mut opt = Adam::new(OptimizerKind::AdamW, 2, 0.1);
        let mut p = vec![2.0, -4.0];
        opt.step(&mut p, &[0.0, 0.0], 0.1).unwrap();
        assert_eq!(p, vec![2.0 * (1.0 - 0.01), -4.0 * (1.0 - 0.01)]);
    }

    #[test]
    fn rejects_non_finite() {
        let mut opt = Adam::new(OptimizerKind::Adam, 2, 0.0);
        let mut p = vec![0.0, 0.0];
        assert!(matches!(
            opt.step(&mut p, &[1.0, f64::NAN], 1e-3),
            Err(Error::NonFiniteGradient { .. })
        ));
        assert_eq!(opt.steps(), 0);
    }

    #[test]
    fn cosine_schedule() {
        assert_eq!(scheduled_lr(1.0, Schedule::Constant, 50, 100), 1.0);
        assert_eq!(scheduled_lr(1.0, Schedule::CosineDecay, 0, 100), 1.0);
        assert!((scheduled_lr(1.0, Schedule::CosineDecay, 50, 100) - 0.5).abs() < 1e-15);
        assert!(scheduled_lr(1.0, Schedule::CosineDecay, 100, 100).abs() < 1e-15);
    }

    #[test]
    fn clipping() {
        let mut g = vec![3.0, 4.0];
        clip_by_norm(&mut g, 1.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
        let mut small = vec![0.1];
        clip_by_norm(&mut small, 1.0);
        assert_eq!(small, vec![0.1]);
    }
}
