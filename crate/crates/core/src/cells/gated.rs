//! Gated recurrent baselines: GRU (and its ODE form), MGU and LSTM.
//!
//! Weight matrices use the same `(m + n) x m` layout as the liquid cells, so a
//! gate preactivation is `z_i = sum_j W_ji y_j + b_i`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cells::uniform_matrix;
use crate::error::{check_len, Result};
use crate::linalg::Matrix;
use crate::math::{sigmoid, tanh_act};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Gate {
    fn init(m: usize, n: usize, rng: &mut impl Rng) -> Self {
        let half = 1.0 / ((m + n).max(1) as f64).sqrt();
        Self {
            w: uniform_matrix(rng, m + n, m, half),
            b: vec![0.0; m],
        }
    }

    fn zeros(m: usize, n: usize) -> Self {
        Self {
            w: Matrix::zeros(m + n, m),
            b: vec![0.0; m],
        }
    }

    /// `y^T W + b`
    pub fn preactivation(&self, y: &[f64]) -> Vec<f64> {
        let mut z = self.w.vecmat(y);
        for (zi, bi) in z.iter_mut().zip(&self.b) {
            *zi += bi;
        }
        z
    }

    fn m(&self) -> usize {
        self.w.cols()
    }

    fn n(&self) -> usize {
        self.w.rows() - self.w.cols()
    }
}

fn concat(h: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(h.len() + x.len());
    y.extend_from_slice(h);
    y.extend_from_slice(x);
    y
}

/// GRU with update gate `f`, candidate `u` and reset gate `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GruParams {
    pub update: Gate,
    pub candidate: Gate,
    pub reset: Gate,
}

/// Minimal gated unit: one forget gate and a candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MguParams {
    pub forget: Gate,
    pub candidate: Gate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input: Gate,
    pub forget: Gate,
    pub output: Gate,
    pub cell: Gate,
}

/// Any of the gated baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GatedBaselineParams {
    Gru(GruParams),
    Mgu(MguParams),
    Lstm(LstmParams),
}

impl GruParams {
    pub fn init(m: usize, n: usize, rng: &mut impl Rng) -> Self {
        Self {
            update: Gate::init(m, n, rng),
            candidate: Gate::init(m, n, rng),
            reset: Gate::init(m, n, rng),
        }
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self {
            update: Gate::zeros(m, n),
            candidate: Gate::zeros(m, n),
            reset: Gate::zeros(m, n),
        }
    }

    pub fn m(&self) -> usize {
        self.update.m()
    }

    pub fn n(&self) -> usize {
        self.update.n()
    }

    /// Returns `(sigma(f), tanh(u))` at `y = [h, x]`, with `u` evaluated at
    /// `y' = [sigma(r) * h, x]`.
    fn gates(&self, h: &[f64], x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_len("GRU state", self.m(), h.len())?;
        check_len("GRU input", self.n(), x.len())?;
        let y = concat(h, x);
        let f: Vec<f64> = self
            .update
            .preactivation(&y)
            .into_iter()
            .map(sigmoid)
            .collect();
        let r = self.reset.preactivation(&y);
        let reset_h: Vec<f64> = h.iter().zip(&r).map(|(hi, ri)| sigmoid(*ri) * hi).collect();
        let u: Vec<f64> = self
            .candidate
            .preactivation(&concat(&reset_h, x))
            .into_iter()
            .map(tanh_act)
            .collect();
        Ok((f, u))
    }
}

impl MguParams {
    pub fn init(m: usize, n: usize, rng: &mut impl Rng) -> Self {
        Self {
            forget: Gate::init(m, n, rng),
            candidate: Gate::init(m, n, rng),
        }
    }

    pub fn m(&self) -> usize {
        self.forget.m()
    }

    pub fn n(&self) -> usize {
        self.forget.n()
    }
}

impl LstmParams {
    pub fn init(m: usize, n: usize, rng: &mut impl Rng) -> Self {
        Self {
            input: Gate::init(m, n, rng),
            forget: Gate::init(m, n, rng),
            output: Gate::init(m, n, rng),
            cell: Gate::init(m, n, rng),
        }
    }

    pub fn m(&self) -> usize {
        self.input.m()
    }

    pub fn n(&self) -> usize {
        self.input.n()
    }
}

/// `dh_i/dt = sigma(f_i) (-h_i + tanh(u_i))`.
pub fn gru_ode_derivative(params: &GruParams, h: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let (f, u) = params.gates(h, x)?;
    Ok((0..h.len()).map(|i| f[i] * (-h[i] + u[i])).collect())
}

/// `h_i = (1 - sigma(f_i)) h_prev,i + sigma(f_i) tanh(u_i)`.
///
/// Evaluated as `h_prev + sigma(f) (-h_prev + tanh(u))`, which is the same
/// expression and makes the step bit-identical to one unit-step Euler update
/// of [`gru_ode_derivative`].
pub fn gru_step(params: &GruParams, h_prev: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let (f, u) = params.gates(h_prev, x)?;
    Ok((0..h_prev.len())
        .map(|i| h_prev[i] + f[i] * (-h_prev[i] + u[i]))
        .collect())
}

/// Minimal gated unit:
/// `f = sigma(W_f [h, x] + b_f)`, `c = tanh(W_c [f * h, x] + b_c)`,
/// `h' = (1 - f) h + f c`.
pub fn mgu_step(params: &MguParams, h_prev: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len("MGU state", params.m(), h_prev.len())?;
    check_len("MGU input", params.n(), x.len())?;
    let y = concat(h_prev, x);
    let f: Vec<f64> = params
        .forget
        .preactivation(&y)
        .into_iter()
        .map(sigmoid)
        .collect();
    let gated: Vec<f64> = h_prev.iter().zip(&f).map(|(h, f)| f * h).collect();
    let c: Vec<f64> = params
        .candidate
        .preactivation(&concat(&gated, x))
        .into_iter()
        .map(tanh_act)
        .collect();
    Ok((0..h_prev.len())
        .map(|i| (1.0 - f[i]) * h_prev[i] + f[i] * c[i])
        .collect())
}

/// Standard LSTM step on the `(h, c)` pair.
pub fn lstm_step(
    params: &LstmParams,
    h_prev: &[f64],
    c_prev: &[f64],
    x: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_len("LSTM state", params.m(), h_prev.len())?;
    check_len("LSTM cell state", params.m(), c_prev.len())?;
    check_len("LSTM input", params.n(), x.len())?;
    let y = concat(h_prev, x);
    let i_g: Vec<f64> = params
        .input
        .preactivation(&y)
        .into_iter()
        .map(sigmoid)
        .collect();
    let f_g: Vec<f64> = params
        .forget
        .preactivation(&y)
        .into_iter()
        .map(sigmoid)
        .collect();
    let o_g: Vec<f64> = params
        .output
        .preactivation(&y)
        .into_iter()
        .map(sigmoid)
        .collect();
    let g: Vec<f64> = params
        .cell
        .preactivation(&y)
        .into_iter()
        .map(tanh_act)
        .collect();
    let c: Vec<f64> = (0..h_prev.len())
        .map(|k| f_g[k] * c_prev[k] + i_g[k] * g[k])
        .collect();
    let h = (0..h_prev.len()).map(|k| o_g[k] * tanh_act(c[k])).collect();
    Ok((h, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    /// Scalar expansion of `sum_j W_ji y_j + b_i`.
    fn pre(g: &Gate, y: &[f64], i: usize) -> f64 {
        let mut z = g.b[i];
        for (j, yj) in y.iter().enumerate() {
            z += g.w.get(j, i) * yj;
        }
        z
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn randomize_biases(g: &mut Gate, r: &mut ChaCha8Rng) {
        for b in g.b.iter_mut() {
            *b = r.random::<f64>() - 0.5;
        }
    }

    #[test]
    fn gru_closed_update_gate_keeps_state() {
        let mut p = GruParams::init(3, 2, &mut rng(1));
        p.update.w = Matrix::zeros(5, 3);
        p.update.b = vec![-800.0; 3];
        let h = [0.3, -0.2, 0.9];
        assert_eq!(gru_step(&p, &h, &[1.0, 2.0]).unwrap(), h.to_vec());
    }

    #[test]
    fn gru_ode_fixed_point() {
        // With the candidate independent of h, h = tanh(u) is a fixed point.
        let mut r = rng(2);
        let mut p = GruParams::init(2, 1, &mut r);
        randomize_biases(&mut p.candidate, &mut r);
        for j in 0..2 {
            for i in 0..2 {
                p.candidate.w.set(j, i, 0.0);
            }
        }
        let x = [0.7];
        let u: Vec<f64> = (0..2)
            .map(|i| pre(&p.candidate, &[0.0, 0.0, x[0]], i).tanh())
            .collect();
        let d = gru_ode_derivative(&p, &u, &x).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn gru_matches_scalar_expansion() {
        let mut r = rng(3);
        let mut p = GruParams::init(3, 2, &mut r);
        randomize_biases(&mut p.update, &mut r);
        randomize_biases(&mut p.reset, &mut r);
        let h = [0.5, -0.4, 0.1];
        let x = [1.0, -2.0];
        let y: Vec<f64> = h.iter().chain(&x).copied().collect();
        let reset_h: Vec<f64> = (0..3).map(|i| sig(pre(&p.reset, &y, i)) * h[i]).collect();
        let y2: Vec<f64> = reset_h.iter().chain(&x).copied().collect();
        let out = gru_step(&p, &h, &x).unwrap();
        let d = gru_ode_derivative(&p, &h, &x).unwrap();
        for i in 0..3 {
            let f = sig(pre(&p.update, &y, i));
            let u = pre(&p.candidate, &y2, i).tanh();
            assert!((out[i] - ((1.0 - f) * h[i] + f * u)).abs() < 1e-15);
            assert!((d[i] - f * (u - h[i])).abs() < 1e-15);
        }
    }

    #[test]
    fn gru_step_is_unit_euler_of_gru_ode() {
        let p = GruParams::init(4, 3, &mut rng(4));
        let h = [0.1, 0.2, -0.3, 0.9];
        let x = [0.4, -0.5, 1.5];
        let d = gru_ode_derivative(&p, &h, &x).unwrap();
        let euler: Vec<f64> = h.iter().zip(&d).map(|(h, d)| h + 1.0 * d).collect();
        assert_eq!(gru_step(&p, &h, &x).unwrap(), euler);
    }

    #[test]
    fn mgu_open_forget_gate_returns_candidate() {
        let mut r = rng(5);
        let mut p = MguParams::init(2, 1, &mut r);
        p.forget.w = Matrix::zeros(3, 2);
        p.forget.b = vec![800.0; 2];
        let h = [0.3, -0.6];
        let x = [0.25];
        let y: Vec<f64> = h.iter().chain(&x).copied().collect();
        let out = mgu_step(&p, &h, &x).unwrap();
        for i in 0..2 {
            assert!((out[i] - pre(&p.candidate, &y, i).tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn mgu_matches_scalar_expansion() {
        let mut r = rng(6);
        let mut p = MguParams::init(3, 1, &mut r);
        randomize_biases(&mut p.forget, &mut r);
        let h = [0.2, -0.1, 0.7];
        let x = [-0.8];
        let y: Vec<f64> = h.iter().chain(&x).copied().collect();
        let f: Vec<f64> = (0..3).map(|i| sig(pre(&p.forget, &y, i))).collect();
        let y2: Vec<f64> = (0..3).map(|i| f[i] * h[i]).chain(x).collect();
        let out = mgu_step(&p, &h, &x).unwrap();
        for i in 0..3 {
            let c = pre(&p.candidate, &y2, i).tanh();
            assert!((out[i] - ((1.0 - f[i]) * h[i] + f[i] * c)).abs() < 1e-15);
        }
    }

    #[test]
    fn lstm_matches_scalar_expansion() {
        let mut r = rng(7);
        let mut p = LstmParams::init(2, 2, &mut r);
        randomize_biases(&mut p.forget, &mut r);
        let h = [0.3, -0.3];
        let c = [1.2, -0.4];
        let x = [0.5, 0.05];
        let y: Vec<f64> = h.iter().chain(&x).copied().collect();
        let (h2, c2) = lstm_step(&p, &h, &c, &x).unwrap();
        for k in 0..2 {
            let i_g = sig(pre(&p.input, &y, k));
            let f_g = sig(pre(&p.forget, &y, k));
            let o_g = sig(pre(&p.output, &y, k));
            let g = pre(&p.cell, &y, k).tanh();
            let cc = f_g * c[k] + i_g * g;
            assert!((c2[k] - cc).abs() < 1e-15);
            assert!((h2[k] - o_g * cc.tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn dimension_errors() {
        let p = GruParams::init(2, 1, &mut rng(0));
        assert!(gru_step(&p, &[0.0], &[0.0]).is_err());
        let q = LstmParams::init(2, 1, &mut rng(0));
        assert!(lstm_step(&q, &[0.0, 0.0], &[0.0], &[0.0]).is_err());
    }
}
