use crate::error::Result;
use crate::linalg::Matrix;
use crate::model::{Model, SequenceInput};
use crate::solvers::SolverConfig;

use super::{backward_sequence, finite_difference_gradient, forward_sequence, GradientSet};

/// Default central-difference step of [`gradient_pair`].
pub const FD_STEP: f64 = 1e-5;

/// `0.5 * ||outputs||^2`, the probe loss of gradient checks.
pub fn half_squared_norm(outputs: &Matrix) -> Result<f64> {
    Ok(0.5 * outputs.as_slice().iter().map(|v| v * v).sum::<f64>())
}

/// BPTT and central-difference gradients of [`half_squared_norm`] of the outputs.
pub fn gradient_pair(
    model: &Model,
    cfg: &SolverConfig,
    seq: &SequenceInput,
    step: f64,
) -> Result<(GradientSet, GradientSet)> {
    let (out, record) = forward_sequence(model, cfg, seq)?;
    // d(0.5 ||o||^2)/do = o
    let analytic = backward_sequence(&record, &out)?;
    let fd = finite_difference_gradient(model, cfg, seq, &half_squared_norm, step)?;
    Ok((analytic, fd))
}
