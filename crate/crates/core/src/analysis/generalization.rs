use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationBoundInputs {
    /// Bound on the training loss.
    pub eps_t: f64,
    /// Largest per-time input discrepancy between paired sequences.
    pub eps_y: f64,
    /// Largest per-time label discrepancy between paired sequences.
    pub eps_o: f64,
    pub lambda: f64,
}

/// `eps_o + eps_t + eps_y * lambda`.
pub fn generalization_bound(inputs: &GeneralizationBoundInputs) -> Result<f64> {
    let GeneralizationBoundInputs {
        eps_t,
        eps_y,
        eps_o,
        lambda,
    } = *inputs;
    for (name, v) in [
        ("eps_t", eps_t),
        ("eps_y", eps_y),
        ("eps_o", eps_o),
        ("lambda", lambda),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{name} must be finite and >= 0, got {v}"
            )));
        }
    }
    Ok(eps_o + eps_t + eps_y * lambda)
}

/// Observed `(eps_y, eps_o)` for paired sequences: the largest per-time
/// Euclidean distance between paired inputs and between paired labels.
///
/// These describe a given pairing; the bound treats them as assumptions.
pub fn descriptive_epsilons(
    inputs: &[(Matrix, Matrix)],
    labels: &[(Matrix, Matrix)],
) -> Result<(f64, f64)> {
    fn max_column_gap(pairs: &[(Matrix, Matrix)]) -> Result<f64> {
        let mut worst = 0.0f64;
        for (a, b) in pairs {
            if a.shape() != b.shape() {
                return Err(Error::DimensionMismatch {
                    context: "paired sequences",
                    expected: a.cols(),
                    actual: b.cols(),
                });
            }
            for t in 0..a.cols() {
                let gap = crate::linalg::norm2(&crate::linalg::sub(&a.column(t), &b.column(t)));
                worst = worst.max(gap);
            }
        }
        Ok(worst)
    }
    Ok((max_column_gap(inputs)?, max_column_gap(labels)?))
}
