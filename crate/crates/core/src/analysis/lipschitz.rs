use serde::{Deserialize, Serialize};

use crate::cells::LiquidCellParams;
use crate::error::{check_len, Error, Result};
use crate::linalg::{spectral_norm, Matrix};
use crate::math::ElastanceKind;
use crate::model::{Model, ModelKind};

pub const POWER_ITERATION_TOL: f64 = 1e-10;
pub const POWER_ITERATION_MAX: usize = 10_000;
/// Margin applied to the empirical hidden-state envelope.
pub const H_BOUND_MARGIN: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub model: ModelKind,
    /// `K x (m + n)`, `v_kj = sum_i |q_ki| (1 + dt D_ij)`.
    pub v: Matrix,
    /// Largest singular value of `v`.
    pub lambda: f64,
    /// `D`, `m x (m + n)`: bounds on `|d hdot_i / d y_j|`.
    pub per_state_derivative_bounds: Matrix,
    pub dt_used: f64,
    pub h_bound: Vec<f64>,
    /// Range of `w` the elastance supremum was taken over; `None` is all of R.
    pub w_range: Option<(f64, f64)>,
}

impl LipschitzReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub const CSV_HEADER: [&'static str; 8] = [
        "model",
        "m",
        "n",
        "outputs",
        "dt",
        "max_h_bound",
        "lambda",
        "frobenius",
    ];

    pub fn csv_row(&self) -> Vec<String> {
        let m = self.per_state_derivative_bounds.rows();
        vec![
            self.model.to_string(),
            m.to_string(),
            (self.v.cols() - m).to_string(),
            self.v.rows().to_string(),
            format!("{:e}", self.dt_used),
            format!("{:e}", self.h_bound.iter().copied().fold(0.0, f64::max)),
            format!("{:e}", self.lambda),
            format!("{:e}", self.v.frobenius_norm()),
        ]
    }
}

/// `D_ij = 0.0625 |g_ji a_ji| h_bound_i + 0.25 |k_ji a_ji e_li| + 1`.
pub fn stc_derivative_bound(params: &LiquidCellParams, h_bound: &[f64]) -> Result<Matrix> {
    let (m, n) = (params.m(), params.n());
    check_len("h_bound", m, h_bound.len())?;
    if let Some(b) = h_bound.iter().find(|b| !(**b >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "h_bound entries must be >= 0, got {b}"
        )));
    }
    Ok(Matrix::from_fn(m, m + n, |i, j| {
        let a = params.a.get(j, i);
        0.0625 * (params.g_raw.get(j, i) * a).abs() * h_bound[i]
            + 0.25 * (params.k_w.get(j, i) * a * params.e_l[i]).abs()
            + 1.0
    }))
}

/// `sup_w eps(w) d + |eps'(w)| c` for `d, c >= 0`, over `w_range` or all of R.
///
/// The asymmetric case is solved in closed form over R; everything else uses
/// a dense grid refined by golden-section search around the best node.
pub fn elastance_sensitivity_sup(
    kind: ElastanceKind,
    k: f64,
    d: f64,
    c: f64,
    w_range: Option<(f64, f64)>,
) -> f64 {
    let f = |w: f64| kind.value(w, k) * d + kind.derivative(w, k).abs() * c;
    if kind == ElastanceKind::Asymmetric && w_range.is_none() {
        // with s = sigma(w): s d + s (1 - s) c, maximized over s in (0, 1)
        return if c <= d {
            d
        } else {
            (d + c) * (d + c) / (4.0 * c)
        };
    }
    let (lo, hi) = w_range.unwrap_or((-(k.abs() + 40.0), k.abs() + 40.0));
    if !(hi > lo) {
        return f(lo);
    }
    const NODES: usize = 4001;
    let step = (hi - lo) / (NODES - 1) as f64;
    let (mut best_w, mut best) = (lo, f(lo));
    for i in 1..NODES {
        let w = lo + step * i as f64;
        let v = f(w);
        if v > best {
            best = v;
            best_w = w;
        }
    }
    let (mut a, mut b) = ((best_w - step).max(lo), (best_w + step).min(hi));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let x1 = b - ratio * (b - a);
        let x2 = a + ratio * (b - a);
        if f(x1) < f(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    best.max(f(0.5 * (a + b))).max(f(hi))
}

fn liquid_derivative_bounds(
    model: &Model,
    h_bound: &[f64],
    w_range: Option<(f64, f64)>,
) -> Result<Matrix> {
    let params = model.liquid().ok_or_else(|| {
        Error::InvalidArgument("Lipschitz bounds cover STC and LRC networks".into())
    })?;
    let stc = stc_derivative_bound(params, h_bound)?;
    match model.spec.kind {
        ModelKind::Stc => Ok(stc),
        ModelKind::Lrc | ModelKind::Lrcu => {
            let el = params.elastance.as_ref().ok_or(Error::MissingElastance)?;
            let (m, n) = (params.m(), params.n());
            Ok(Matrix::from_fn(m, m + n, |i, j| {
                // |hdot^s_i| <= |h_i| + |e_li|
                let c = el.o.get(j, i).abs() * (h_bound[i] + params.e_l[i].abs());
                elastance_sensitivity_sup(el.kind, el.k(i), stc.get(i, j), c, w_range)
            }))
        }
        other => Err(Error::InvalidArgument(format!(
            "Lipschitz bounds cover STC and LRC networks, not {other}"
        ))),
    }
}

/// Bound on the Lipschitz constant of one explicit-Euler step `y = [h, x] -> o`.
pub fn lipschitz_bound(model: &Model, dt: f64, h_bound: &[f64]) -> Result<LipschitzReport> {
    lipschitz_bound_with(model, dt, h_bound, None)
}

/// [`lipschitz_bound`] with the elastance supremum restricted to `w_range`.
pub fn lipschitz_bound_with(
    model: &Model,
    dt: f64,
    h_bound: &[f64],
    w_range: Option<(f64, f64)>,
) -> Result<LipschitzReport> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!("dt must be > 0, got {dt}")));
    }
    if let Some((lo, hi)) = w_range {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!(
                "empty w range [{lo}, {hi}]"
            )));
        }
    }
    let d = liquid_derivative_bounds(model, h_bound, w_range)?;
    let q = &model
        .output
        .as_ref()
        .expect("liquid models have a readout")
        .q;
    let (k, m, cols) = (q.rows(), d.rows(), d.cols());
    let v = Matrix::from_fn(k, cols, |r, j| {
        (0..m)
            .map(|i| q.get(r, i).abs() * (1.0 + dt * d.get(i, j)))
            .sum()
    });
    let lambda = spectral_norm(&v, POWER_ITERATION_TOL, POWER_ITERATION_MAX)?;
    Ok(LipschitzReport {
        model: model.spec.kind,
        v,
        lambda,
        per_state_derivative_bounds: d,
        dt_used: dt,
        h_bound: h_bound.to_vec(),
        w_range,
    })
}
