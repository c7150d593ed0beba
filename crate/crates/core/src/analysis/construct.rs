use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cells::LiquidCellParams;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{ElastanceKind, ElastanceParams};
use crate::model::{CellParams, Model, ModelKind};

/// `o*_ji = min(0.0625 |g_ji a_ji|, 0.25 |k_ji a_ji|)`, shaped like `g`.
pub fn o_star(params: &LiquidCellParams) -> Matrix {
    let (rows, cols) = params.a.shape();
    Matrix::from_fn(rows, cols, |j, i| {
        let a = params.a.get(j, i);
        (0.0625 * (params.g_raw.get(j, i) * a).abs()).min(0.25 * (params.k_w.get(j, i) * a).abs())
    })
}

/// Copies an STC cell and adds elastance weights `o = +-shrink * o*`,
/// `p = 0`, raw `k = 1`. Signs are drawn from `seed`.
pub fn lrc_from_stc(
    stc: &LiquidCellParams,
    kind: ElastanceKind,
    shrink: f64,
    seed: u64,
) -> Result<LiquidCellParams> {
    if !(shrink > 0.0 && shrink <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "shrink must be in (0, 1], got {shrink}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut o = o_star(stc);
    for v in o.as_mut_slice() {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        *v *= shrink * sign;
    }
    let m = stc.m();
    let mut out = stc.clone();
    out.elastance = Some(ElastanceParams::new(kind, o, vec![0.0; m], vec![1.0; m])?);
    Ok(out)
}

/// [`lrc_from_stc`] on a whole STC model; readout and encoder are kept.
pub fn lrc_model_from_stc(
    stc: &Model,
    kind: ElastanceKind,
    shrink: f64,
    seed: u64,
) -> Result<Model> {
    let params = match (&stc.cell, stc.spec.kind) {
        (CellParams::Liquid(p), ModelKind::Stc) => p,
        _ => {
            return Err(Error::InvalidArgument(format!(
                "expected an STC model, got {}",
                stc.spec.kind
            )))
        }
    };
    let mut out = stc.clone();
    out.spec.kind = ModelKind::Lrc;
    out.spec.elastance = Some(kind);
    out.cell = CellParams::Liquid(lrc_from_stc(params, kind, shrink, seed)?);
    Ok(out)
}
