use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{Model, NamedTensor, SequenceInput};
use crate::solvers::SolverConfig;

/// One gradient tensor per named model parameter, in the model's visiting order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientSet {
    pub tensors: Vec<NamedTensor>,
}

/// Worst entry of an elementwise gradient comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientComparison {
    pub max_rel_error: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    /// Per-tensor maximum relative error.
    pub per_tensor: Vec<(String, f64)>,
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / a.abs().max(b.abs()).max(floor)
}

/// Denominator floor of [`relative_error`] in gradient checks: gradients
/// smaller than this are compared with absolute tolerance `floor * rel_tol`.
pub const GRAD_CHECK_FLOOR: f64 = 1e-4;
pub const GRAD_CHECK_TOL: f64 = 1e-4;

impl GradientSet {
    pub fn zeros_like(model: &Model) -> Self {
        let tensors = model
            .named_tensors()
            .into_iter()
            .map(|mut t| {
                t.values.iter_mut().for_each(|v| *v = 0.0);
                t
            })
            .collect();
        Self { tensors }
    }

    pub fn from_flat(model: &Model, flat: &[f64]) -> Result<Self> {
        let mut out = Self::zeros_like(model);
        crate::error::check_len("flat gradient", model.param_count(), flat.len())?;
        let mut offset = 0;
        for t in &mut out.tensors {
            let len = t.values.len();
            t.values.copy_from_slice(&flat[offset..offset + len]);
            offset += len;
        }
        Ok(out)
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors
            .iter()
            .flat_map(|t| t.values.iter().copied())
            .collect()
    }

    pub fn get(&self, name: &str) -> Option<&NamedTensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut NamedTensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    fn check_same_layout(&self, other: &Self) -> Result<()> {
        let same = self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape);
        if same {
            Ok(())
        } else {
            Err(Error::RecordMismatch(
                "gradient sets have different layouts".into(),
            ))
        }
    }

    pub fn add_assign(&mut self, other: &Self) -> Result<()> {
        self.check_same_layout(other)?;
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.values.iter_mut().zip(&b.values) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, c: f64) {
        for t in &mut self.tensors {
            t.values.iter_mut().for_each(|v| *v *= c);
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors
            .iter()
            .flat_map(|t| t.values.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn check_finite(&self) -> Result<()> {
        for t in &self.tensors {
            if t.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    name: t.name.clone(),
                });
            }
        }
        Ok(())
    }

    /// Elementwise comparison with [`relative_error`] at [`GRAD_CHECK_FLOOR`].
    pub fn compare(&self, other: &Self) -> Result<GradientComparison> {
        self.check_same_layout(other)?;
        let mut cmp = GradientComparison {
            max_rel_error: 0.0,
            worst_tensor: String::new(),
            worst_index: 0,
            per_tensor: Vec::with_capacity(self.tensors.len()),
        };
        for (a, b) in self.tensors.iter().zip(&other.tensors) {
            let mut worst = 0.0f64;
            for (i, (x, y)) in a.values.iter().zip(&b.values).enumerate() {
                let e = relative_error(*x, *y, GRAD_CHECK_FLOOR);
                // NaN compares false; make it the worst possible entry
                let e = if e.is_nan() { f64::INFINITY } else { e };
                if e > cmp.max_rel_error || cmp.worst_tensor.is_empty() {
                    cmp.max_rel_error = e;
                    cmp.worst_tensor = a.name.clone();
                    cmp.worst_index = i;
                }
                worst = worst.max(e);
            }
            cmp.per_tensor.push((a.name.clone(), worst));
        }
        Ok(cmp)
    }
}

/// Central differences of `loss(predict(model))` with respect to every raw
/// parameter. Uses the plain forward path, so it is independent of the tape.
pub fn finite_difference_gradient(
    model: &Model,
    cfg: &SolverConfig,
    seq: &SequenceInput,
    loss: &dyn Fn(&Matrix) -> Result<f64>,
    step: f64,
) -> Result<GradientSet> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(
            "finite-difference step must be > 0".into(),
        ));
    }
    let base = model.flat_params();
    let mut probe = model.clone();
    let mut grad = vec![0.0; base.len()];
    let mut params = base.clone();
    for i in 0..base.len() {
        params[i] = base[i] + step;
        probe.set_flat_params(&params)?;
        let plus = loss(&probe.predict(cfg, seq)?)?;
        params[i] = base[i] - step;
        probe.set_flat_params(&params)?;
        let minus = loss(&probe.predict(cfg, seq)?)?;
        params[i] = base[i];
        grad[i] = (plus - minus) / (2.0 * step);
    }
    GradientSet::from_flat(model, &grad)
}
