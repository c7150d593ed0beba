//! Continuous-time cell derivatives and discrete recurrent units.

mod gated;
mod layers;
mod liquid;

pub use gated::{
    gru_ode_derivative, gru_step, lstm_step, mgu_step, Gate, GatedBaselineParams, GruParams,
    LstmParams, MguParams,
};
pub use layers::{AffineMap, MlpOdeParams, OutputLayer};
pub use liquid::{
    lrc_derivative, lrcu_step, ltc_derivative, stc_derivative, LiquidCellParams, LiquidKind,
    PreactivationBundle,
};

use rand::Rng;

use crate::linalg::Matrix;

/// Matrix with entries drawn from `U[-half, half]`.
pub(crate) fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize, half: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| half * (2.0 * rng.random::<f64>() - 1.0))
}
