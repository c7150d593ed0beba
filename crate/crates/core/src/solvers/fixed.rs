use crate::cells::{LiquidCellParams, LiquidKind};
use crate::error::{check_len, Error, Result};
use crate::math::{sigmoid, tanh_act};
use crate::solvers::{Scheme, SolverConfig};

/// Explicit Euler over one observation interval:
/// `h <- h + (dt / unfoldings) * deriv(h, x)`, repeated `unfoldings` times.
pub fn euler_advance<F>(
    mut deriv: F,
    state: &[f64],
    x: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>>
where
    F: FnMut(&[f64], &[f64]) -> Result<Vec<f64>>,
{
    if cfg.scheme != Scheme::ExplicitEuler {
        return Err(Error::InvalidArgument(
            "euler_advance requires the explicit Euler scheme".into(),
        ));
    }
    cfg.validate()?;
    let delta = cfg.dt / cfg.unfoldings as f64;
    let mut h = state.to_vec();
    for substep in 0..cfg.unfoldings {
        let d = deriv(&h, x)?;
        check_len("euler_advance derivative", h.len(), d.len())?;
        for (hi, di) in h.iter_mut().zip(&d) {
            *hi += delta * di;
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::EulerDiverged { substep });
        }
    }
    Ok(h)
}

/// Fused semi-implicit Euler over one observation interval. Per substep of
/// length `delta = dt / unfoldings`:
///
/// ```text
/// h_i <- (h_i + delta c_i T(u_i) e_li) / (1 + delta c_i S(f_i))
/// ```
///
/// with `S = T = identity` for LTC, `S = sigma`, `T = tanh` otherwise, and
/// `c_i = eps(w_i)` for LRC, 1 elsewhere.
pub fn hybrid_euler_advance(
    cell: &LiquidCellParams,
    kind: LiquidKind,
    state: &[f64],
    x: &[f64],
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    if cfg.scheme != Scheme::HybridEuler {
        return Err(Error::InvalidArgument(
            "hybrid_euler_advance requires the hybrid Euler scheme".into(),
        ));
    }
    cfg.validate()?;
    let delta = cfg.dt / cfg.unfoldings as f64;
    let mut h = state.to_vec();
    for substep in 0..cfg.unfoldings {
        let pre = cell.preactivations(&h, x)?;
        let c = match kind {
            LiquidKind::Lrc => cell.elastance_values(&pre.w)?,
            _ => vec![1.0; h.len()],
        };
        for i in 0..h.len() {
            let (decay, drive) = match kind {
                LiquidKind::Ltc => (pre.f[i], pre.u[i]),
                LiquidKind::Stc | LiquidKind::Lrc => (sigmoid(pre.f[i]), tanh_act(pre.u[i])),
            };
            let denom = 1.0 + delta * c[i] * decay;
            if !(denom > 0.0) {
                return Err(Error::HybridDenominator {
                    substep,
                    value: denom,
                });
            }
            h[i] = (h[i] + delta * c[i] * drive * cell.e_l[i]) / denom;
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::EulerDiverged { substep });
        }
    }
    Ok(h)
}

/// Classical fourth-order Runge-Kutta with `steps` equal steps over `dt`,
/// for autonomous systems.
pub fn rk4_advance<F>(mut deriv: F, state: &[f64], dt: f64, steps: usize) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if steps == 0 || !(dt > 0.0) {
        return Err(Error::InvalidArgument(
            "rk4 needs steps >= 1 and dt > 0".into(),
        ));
    }
    let h = dt / steps as f64;
    let mut y = state.to_vec();
    let axpy = |y: &[f64], k: &[f64], a: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(y, k)| y + a * k).collect()
    };
    for substep in 0..steps {
        let k1 = deriv(&y)?;
        check_len("rk4 derivative", y.len(), k1.len())?;
        let k2 = deriv(&axpy(&y, &k1, 0.5 * h))?;
        let k3 = deriv(&axpy(&y, &k2, 0.5 * h))?;
        let k4 = deriv(&axpy(&y, &k3, h))?;
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::EulerDiverged { substep });
        }
    }
    Ok(y)
}
