//! LTC, STC and LRC derivatives and the discrete LRC unit.
//!
//! All three cells share the synaptic preactivations
//!
//! ```text
//! f_i = sum_j g_ji sigma(a_ji y_j + b_ji) + g_li      (forget conductance)
//! u_i = sum_j k_ji sigma(a_ji y_j + b_ji) + g_li      (update conductance)
//! w_i = sum_j o_ji y_j + p_i                          (elastance preactivation)
//! ```
//!
//! evaluated at `y = [h, x]`. Conductances `g` and `g_l` are stored raw and
//! used through `|.|`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cells::uniform_matrix;
use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::math::{sigmoid, tanh_act, ElastanceKind, ElastanceParams};

/// Which member of the liquid family a [`LiquidCellParams`] is evaluated as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiquidKind {
    Ltc,
    Stc,
    Lrc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiquidCellParams {
    /// Maximal synaptic conductances, raw. `(m + n) x m`.
    pub g_raw: Matrix,
    /// Gate slopes. `(m + n) x m`.
    pub a: Matrix,
    /// Gate offsets. `(m + n) x m`.
    pub b: Matrix,
    /// Leak conductance, raw. Length `m`.
    pub g_l_raw: Vec<f64>,
    /// Leak (resting) potential. Length `m`.
    pub e_l: Vec<f64>,
    /// Signed update weights. `(m + n) x m`.
    pub k_w: Matrix,
    /// Present for LRC cells only.
    pub elastance: Option<ElastanceParams>,
}

/// Forget, update and elastance preactivations of one evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PreactivationBundle {
    pub f: Vec<f64>,
    pub u: Vec<f64>,
    /// Empty when the cell has no elastance.
    pub w: Vec<f64>,
}

impl LiquidCellParams {
    /// Validates dimensions of an explicit parameter set.
    pub fn new(
        g_raw: Matrix,
        a: Matrix,
        b: Matrix,
        g_l_raw: Vec<f64>,
        e_l: Vec<f64>,
        k_w: Matrix,
        elastance: Option<ElastanceParams>,
    ) -> Result<Self> {
        let shape = g_raw.shape();
        let m = shape.1;
        if shape.0 < m {
            return Err(Error::InvalidArgument(format!(
                "synaptic matrices must have at least m = {m} rows, got {}",
                shape.0
            )));
        }
        for (name, mat) in [("a", &a), ("b", &b), ("k_w", &k_w)] {
            if mat.shape() != shape {
                return Err(Error::InvalidArgument(format!(
                    "`{name}` has shape {:?}, expected {shape:?}",
                    mat.shape()
                )));
            }
        }
        check_len("LiquidCellParams::g_l", m, g_l_raw.len())?;
        check_len("LiquidCellParams::e_l", m, e_l.len())?;
        if let Some(el) = &elastance {
            if el.o.shape() != shape {
                return Err(Error::InvalidArgument(format!(
                    "elastance `o` has shape {:?}, expected {shape:?}",
                    el.o.shape()
                )));
            }
        }
        Ok(Self {
            g_raw,
            a,
            b,
            g_l_raw,
            e_l,
            k_w,
            elastance,
        })
    }

    /// All-zero cell; conductances and potentials are zero, elastance absent.
    pub fn zeros(m: usize, n: usize) -> Self {
        let z = Matrix::zeros(m + n, m);
        Self {
            g_raw: z.clone(),
            a: z.clone(),
            b: z.clone(),
            g_l_raw: vec![0.0; m],
            e_l: vec![0.0; m],
            k_w: z,
            elastance: None,
        }
    }

    /// Default initialization: `g, a, k_w, o ~ U[-0.5, 0.5] / sqrt(m + n)`,
    /// `b = p = 0`, `g_l = 0.1`, `e_l = 1`, raw `k = 1`.
    pub fn init(m: usize, n: usize, elastance: Option<ElastanceKind>, rng: &mut impl Rng) -> Self {
        let half = 0.5 / ((m + n).max(1) as f64).sqrt();
        let g_raw = uniform_matrix(rng, m + n, m, half);
        let a = uniform_matrix(rng, m + n, m, half);
        let k_w = uniform_matrix(rng, m + n, m, half);
        let elastance = elastance.map(|kind| ElastanceParams {
            kind,
            o: uniform_matrix(rng, m + n, m, half),
            p: vec![0.0; m],
            k_raw: vec![1.0; m],
        });
        Self {
            g_raw,
            a,
            b: Matrix::zeros(m + n, m),
            g_l_raw: vec![0.1; m],
            e_l: vec![1.0; m],
            k_w,
            elastance,
        }
    }

    /// Number of neurons `m`.
    #[inline]
    pub fn m(&self) -> usize {
        self.g_raw.cols()
    }

    /// Number of external inputs `n`.
    #[inline]
    pub fn n(&self) -> usize {
        self.g_raw.rows() - self.g_raw.cols()
    }

    #[inline]
    pub fn g(&self, j: usize, i: usize) -> f64 {
        self.g_raw.get(j, i).abs()
    }

    #[inline]
    pub fn g_l(&self, i: usize) -> f64 {
        self.g_l_raw[i].abs()
    }

    /// Concatenates `[h, x]` after checking both lengths.
    pub fn concat(&self, h: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        check_len("liquid cell state", self.m(), h.len())?;
        check_len("liquid cell input", self.n(), x.len())?;
        let mut y = Vec::with_capacity(h.len() + x.len());
        y.extend_from_slice(h);
        y.extend_from_slice(x);
        Ok(y)
    }

    /// Evaluates `f`, `u` and (for LRC cells) `w` at `y = [h, x]`.
    pub fn preactivations(&self, h: &[f64], x: &[f64]) -> Result<PreactivationBundle> {
        let y = self.concat(h, x)?;
        let m = self.m();
        let mut f: Vec<f64> = (0..m).map(|i| self.g_l(i)).collect();
        let mut u = f.clone();
        for (j, &yj) in y.iter().enumerate() {
            for i in 0..m {
                let s = sigmoid(self.a.get(j, i) * yj + self.b.get(j, i));
                f[i] += self.g(j, i) * s;
                u[i] += self.k_w.get(j, i) * s;
            }
        }
        let w = match &self.elastance {
            Some(el) => el.preactivation(&y)?,
            None => Vec::new(),
        };
        Ok(PreactivationBundle { f, u, w })
    }

    /// `eps(w)` for this cell's elastance.
    pub fn elastance_values(&self, w: &[f64]) -> Result<Vec<f64>> {
        let el = self.elastance.as_ref().ok_or(Error::MissingElastance)?;
        crate::math::elastance(el, w)
    }

    /// Dispatches to the derivative of the requested member of the family.
    pub fn derivative(&self, kind: LiquidKind, h: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        match kind {
            LiquidKind::Ltc => ltc_derivative(self, h, x),
            LiquidKind::Stc => stc_derivative(self, h, x),
            LiquidKind::Lrc => lrc_derivative(self, h, x),
        }
    }
}

/// `dh_i/dt = -f_i h_i + u_i e_li`.
pub fn ltc_derivative(params: &LiquidCellParams, h: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let pre = params.preactivations(h, x)?;
    Ok((0..params.m())
        .map(|i| -pre.f[i] * h[i] + pre.u[i] * params.e_l[i])
        .collect())
}

#[inline]
fn saturated(pre: &PreactivationBundle, e_l: &[f64], h: &[f64], i: usize) -> f64 {
    -sigmoid(pre.f[i]) * h[i] + tanh_act(pre.u[i]) * e_l[i]
}

/// `dh_i/dt = -sigma(f_i) h_i + tanh(u_i) e_li`.
pub fn stc_derivative(params: &LiquidCellParams, h: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let pre = params.preactivations(h, x)?;
    Ok((0..params.m())
        .map(|i| saturated(&pre, &params.e_l, h, i))
        .collect())
}

/// `dh_i/dt = eps(w_i) (-sigma(f_i) h_i + tanh(u_i) e_li)`.
pub fn lrc_derivative(params: &LiquidCellParams, h: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if params.elastance.is_none() {
        return Err(Error::MissingElastance);
    }
    let pre = params.preactivations(h, x)?;
    let eps = params.elastance_values(&pre.w)?;
    Ok((0..params.m())
        .map(|i| eps[i] * saturated(&pre, &params.e_l, h, i))
        .collect())
}

/// One LRC unit update: `h = h_prev + dt * eps(w) (-sigma(f) h_prev + tanh(u) e_l)`.
///
/// With `dt = 1` this is `(1 - eps sigma(f)) h_prev + eps tanh(u) e_l`, and it is
/// bit-for-bit one explicit Euler step of [`lrc_derivative`].
pub fn lrcu_step(
    params: &LiquidCellParams,
    h_prev: &[f64],
    x: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "LRCU time step must be > 0, got {dt}"
        )));
    }
    let d = lrc_derivative(params, h_prev, x)?;
    Ok(h_prev.iter().zip(&d).map(|(h, d)| h + dt * d).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{sigmoid, ElastanceKind};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_cell(m: usize, n: usize, kind: Option<ElastanceKind>, seed: u64) -> LiquidCellParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = LiquidCellParams::init(m, n, kind, &mut rng);
        // widen the distribution so gates are not all near their midpoints
        for v in p.b.as_mut_slice() {
            *v = rng.random::<f64>() * 2.0 - 1.0;
        }
        for v in p.e_l.iter_mut() {
            *v = rng.random::<f64>() * 4.0 - 2.0;
        }
        if let Some(el) = p.elastance.as_mut() {
            for v in el.p.iter_mut() {
                *v = rng.random::<f64>() - 0.5;
            }
        }
        p
    }

    /// Scalar-by-scalar expansion of the forget/update sums, written
    /// independently of `preactivations`.
    fn expand(p: &LiquidCellParams, h: &[f64], x: &[f64], i: usize) -> (f64, f64) {
        let y: Vec<f64> = h.iter().chain(x).copied().collect();
        let mut f = p.g_l_raw[i].abs();
        let mut u = p.g_l_raw[i].abs();
        for j in 0..y.len() {
            let gate = 1.0 / (1.0 + (-(p.a.get(j, i) * y[j] + p.b.get(j, i))).exp());
            f += p.g_raw.get(j, i).abs() * gate;
            u += p.k_w.get(j, i) * gate;
        }
        (f, u)
    }

    #[test]
    fn ltc_zero_conductances() {
        let p = LiquidCellParams::zeros(3, 2);
        let d = ltc_derivative(&p, &[0.3, -1.0, 2.0], &[0.5, 0.1]).unwrap();
        assert_eq!(d, vec![0.0; 3]);
    }

    #[test]
    fn ltc_rest_state() {
        let mut p = LiquidCellParams::zeros(1, 0);
        p.g_l_raw = vec![1.0];
        p.e_l = vec![2.0];
        assert_eq!(ltc_derivative(&p, &[2.0], &[]).unwrap(), vec![0.0]);
    }

    #[test]
    fn ltc_matches_scalar_expansion() {
        let p = random_cell(2, 1, None, 3);
        let h = [0.4, -0.9];
        let x = [1.3];
        let d = ltc_derivative(&p, &h, &x).unwrap();
        for i in 0..2 {
            let (f, u) = expand(&p, &h, &x, i);
            let want = -f * h[i] + u * p.e_l[i];
            assert!((d[i] - want).abs() < 1e-14, "{} vs {}", d[i], want);
        }
    }

    #[test]
    fn stc_fixed_point_and_closed_gates() {
        let p = random_cell(2, 1, None, 5);
        let x = [0.2];
        // Solve sigma(f_i) h_i = tanh(u_i) e_li by fixed-point iteration on h.
        let mut h = vec![0.0, 0.0];
        for _ in 0..2000 {
            let pre = p.preactivations(&h, &x).unwrap();
            h = (0..2)
                .map(|i| tanh_act(pre.u[i]) * p.e_l[i] / sigmoid(pre.f[i]))
                .collect();
        }
        let d = stc_derivative(&p, &h, &x).unwrap();
        assert!(d.iter().all(|v| v.abs() < 1e-12), "{d:?}");

        // f -> -inf is impossible with |g_l|, so close the forget gate through
        // e_l = 0 and u = 0 instead: k = 0, g_l = 0, and h = 0.
        let mut q = LiquidCellParams::zeros(2, 1);
        q.e_l = vec![3.0, -1.0];
        let d = stc_derivative(&q, &[0.0, 0.0], &[5.0]).unwrap();
        assert_eq!(d, vec![0.0, 0.0]);
    }

    #[test]
    fn stc_matches_scalar_expansion() {
        let p = random_cell(3, 2, None, 11);
        let h = [0.1, -0.5, 0.8];
        let x = [-1.0, 0.25];
        let d = stc_derivative(&p, &h, &x).unwrap();
        for i in 0..3 {
            let (f, u) = expand(&p, &h, &x, i);
            let want = -h[i] / (1.0 + (-f).exp()) + u.tanh() * p.e_l[i];
            assert!((d[i] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn lrc_requires_elastance() {
        let p = random_cell(2, 1, None, 1);
        assert!(matches!(
            lrc_derivative(&p, &[0.0, 0.0], &[0.0]),
            Err(Error::MissingElastance)
        ));
    }

    #[test]
    fn lrc_zero_elastance_freezes_state() {
        let mut p = random_cell(3, 2, Some(ElastanceKind::Symmetric), 2);
        p.elastance.as_mut().unwrap().k_raw = vec![0.0; 3];
        let d = lrc_derivative(&p, &[1.0, -2.0, 0.5], &[3.0, -3.0]).unwrap();
        assert_eq!(d, vec![0.0; 3]);
        let h = lrcu_step(&p, &[1.0, -2.0, 0.5], &[3.0, -3.0], 1.0).unwrap();
        assert_eq!(h, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn lrc_unit_elastance_reduces_to_stc() {
        let mut p = random_cell(3, 2, Some(ElastanceKind::Asymmetric), 4);
        // sigma(w) == 1.0 exactly once w > ~37
        p.elastance.as_mut().unwrap().p = vec![60.0; 3];
        p.elastance.as_mut().unwrap().o = Matrix::zeros(5, 3);
        let h = [0.3, 0.2, -0.7];
        let x = [0.9, -0.4];
        assert_eq!(
            lrc_derivative(&p, &h, &x).unwrap(),
            stc_derivative(&p, &h, &x).unwrap()
        );
    }

    #[test]
    fn lrc_is_elastance_times_stc() {
        let p = random_cell(3, 1, Some(ElastanceKind::Symmetric), 9);
        let h = [0.6, -0.1, 0.3];
        let x = [0.7];
        let y: Vec<f64> = h.iter().chain(&x).copied().collect();
        let el = p.elastance.as_ref().unwrap();
        let stc = stc_derivative(&p, &h, &x).unwrap();
        let lrc = lrc_derivative(&p, &h, &x).unwrap();
        for i in 0..3 {
            let w: f64 = (0..4).map(|j| el.o.get(j, i) * y[j]).sum::<f64>() + el.p[i];
            let k = el.k_raw[i].abs();
            let eps = 1.0 / (1.0 + (-(w + k)).exp()) - 1.0 / (1.0 + (-(w - k)).exp());
            assert!((lrc[i] - eps * stc[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn lrcu_full_overwrite() {
        // eps = 1 (asymmetric, huge p), sigma(f) = 1 (huge g_l), dt = 1
        let mut p = random_cell(2, 1, Some(ElastanceKind::Asymmetric), 8);
        p.elastance.as_mut().unwrap().p = vec![60.0; 2];
        p.elastance.as_mut().unwrap().o = Matrix::zeros(3, 2);
        p.g_l_raw = vec![60.0; 2];
        let h_prev = [5.0, -4.0];
        let x = [0.1];
        let pre = p.preactivations(&h_prev, &x).unwrap();
        let h = lrcu_step(&p, &h_prev, &x, 1.0).unwrap();
        for i in 0..2 {
            assert!((h[i] - pre.u[i].tanh() * p.e_l[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn lrcu_matches_gated_form() {
        let p = random_cell(3, 2, Some(ElastanceKind::Asymmetric), 21);
        let h_prev = [0.4, -0.3, 1.1];
        let x = [0.5, 0.5];
        let pre = p.preactivations(&h_prev, &x).unwrap();
        let eps = p.elastance_values(&pre.w).unwrap();
        let h = lrcu_step(&p, &h_prev, &x, 1.0).unwrap();
        for i in 0..3 {
            let gated = (1.0 - eps[i] * sigmoid(pre.f[i])) * h_prev[i]
                + eps[i] * pre.u[i].tanh() * p.e_l[i];
            assert!((h[i] - gated).abs() < 1e-15 * 8.0);
        }
    }

    #[test]
    fn lrcu_rejects_non_positive_dt() {
        let p = random_cell(1, 1, Some(ElastanceKind::Asymmetric), 0);
        assert!(lrcu_step(&p, &[0.0], &[0.0], 0.0).is_err());
        assert!(lrcu_step(&p, &[0.0], &[0.0], -1.0).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let p = random_cell(2, 1, None, 0);
        assert!(ltc_derivative(&p, &[0.0], &[0.0]).is_err());
        assert!(stc_derivative(&p, &[0.0, 0.0], &[]).is_err());
    }
}
