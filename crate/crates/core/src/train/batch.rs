use rayon::prelude::*;

use crate::autodiff::{backward_sequence, forward_sequence, GradientSet};
use crate::error::Result;
use crate::linalg::Matrix;
use crate::model::{Model, SequenceInput};
use crate::solvers::SolverConfig;

/// Mean loss and mean gradient over a batch. A non-finite item loss makes the
/// returned loss non-finite without attempting its backward pass.
///
/// Items are evaluated in parallel against the same parameters; the
/// per-item results are summed in item order, so the result does not depend
/// on the thread count.
pub fn batch_gradient<I, B, O>(
    model: &Model,
    cfg: &SolverConfig,
    items: &[I],
    build: B,
    objective: O,
) -> Result<(f64, GradientSet)>
where
    I: Sync,
    B: Fn(&I) -> SequenceInput + Sync,
    O: Fn(&I, &Matrix) -> Result<(f64, Matrix)> + Sync,
{
    let per_item: Vec<Result<(f64, GradientSet)>> = items
        .par_iter()
        .map(|item| {
            let seq = build(item);
            let (out, record) = forward_sequence(model, cfg, &seq)?;
            let (loss, dloss) = objective(item, &out)?;
            if !loss.is_finite() {
                // reported by the caller as divergence
                return Ok((loss, GradientSet::zeros_like(model)));
            }
            Ok((loss, backward_sequence(&record, &dloss)?))
        })
        .collect();
    let mut total = 0.0;
    let mut grad = GradientSet::zeros_like(model);
    for r in per_item {
        let (loss, g) = r?;
        total += loss;
        grad.add_assign(&g)?;
    }
    let scale = 1.0 / items.len().max(1) as f64;
    grad.scale(scale);
    Ok((total * scale, grad))
}
