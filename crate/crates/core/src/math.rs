//! Activations and liquid elastances shared by every cell.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::linalg::Matrix;

/// Logistic sigmoid, evaluated with separate branches for the two signs of
/// `x` so that `exp` never overflows.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `sigma'(x) = sigma(x) (1 - sigma(x))`, at most 0.25 (attained at 0).
#[inline]
pub fn sigmoid_prime(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s)
}

/// `sigma''(x) = sigma'(x) (1 - 2 sigma(x))`.
#[inline]
pub fn sigmoid_second(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 - s) * (1.0 - 2.0 * s)
}

/// Hyperbolic tangent activation.
#[inline]
pub fn tanh_act(x: f64) -> f64 {
    x.tanh()
}

/// `tanh'(x) = 1 - tanh(x)^2`, at most 1 (attained at 0).
#[inline]
pub fn tanh_prime(x: f64) -> f64 {
    let t = x.tanh();
    1.0 - t * t
}

/// Shape of the elastance gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElastanceKind {
    /// `eps(w) = sigma(w)`
    Asymmetric,
    /// `eps(w) = sigma(w + k) - sigma(w - k)`, `k >= 0`
    Symmetric,
}

impl ElastanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElastanceKind::Asymmetric => "asymmetric",
            ElastanceKind::Symmetric => "symmetric",
        }
    }

    /// Scalar elastance for a given effective half-width `k` (ignored for the
    /// asymmetric kind).
    #[inline]
    pub fn value(self, w: f64, k: f64) -> f64 {
        match self {
            ElastanceKind::Asymmetric => sigmoid(w),
            ElastanceKind::Symmetric => sigmoid(w + k) - sigmoid(w - k),
        }
    }

    /// Derivative of [`ElastanceKind::value`] with respect to `w`.
    #[inline]
    pub fn derivative(self, w: f64, k: f64) -> f64 {
        match self {
            ElastanceKind::Asymmetric => sigmoid_prime(w),
            ElastanceKind::Symmetric => sigmoid_prime(w + k) - sigmoid_prime(w - k),
        }
    }

    /// Second derivative with respect to `w`.
    #[inline]
    pub fn second_derivative(self, w: f64, k: f64) -> f64 {
        match self {
            ElastanceKind::Asymmetric => sigmoid_second(w),
            ElastanceKind::Symmetric => sigmoid_second(w + k) - sigmoid_second(w - k),
        }
    }
}

impl std::str::FromStr for ElastanceKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "asymmetric" | "a" => Ok(ElastanceKind::Asymmetric),
            "symmetric" | "s" => Ok(ElastanceKind::Symmetric),
            other => Err(format!(
                "unknown elastance kind `{other}` (expected asymmetric|symmetric)"
            )),
        }
    }
}

/// Parameters of the elastance gate `eps(w_i)` with `w_i = sum_j o_ji y_j + p_i`.
///
/// `k_raw` is unconstrained; the half-width actually used is `|k_raw|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElastanceParams {
    pub kind: ElastanceKind,
    /// `(m + n) x m`
    pub o: Matrix,
    pub p: Vec<f64>,
    pub k_raw: Vec<f64>,
}

impl ElastanceParams {
    pub fn new(kind: ElastanceKind, o: Matrix, p: Vec<f64>, k_raw: Vec<f64>) -> Result<Self> {
        let m = o.cols();
        check_len("ElastanceParams::p", m, p.len())?;
        check_len("ElastanceParams::k", m, k_raw.len())?;
        Ok(Self { kind, o, p, k_raw })
    }

    /// Number of neurons `m`.
    pub fn neurons(&self) -> usize {
        self.o.cols()
    }

    /// Effective (non-negative) half-width of neuron `i`.
    #[inline]
    pub fn k(&self, i: usize) -> f64 {
        self.k_raw[i].abs()
    }

    /// Preactivation `w = o^T y + p`.
    pub fn preactivation(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("ElastanceParams::preactivation", self.o.rows(), y.len())?;
        let mut w = self.o.vecmat(y);
        for (wi, pi) in w.iter_mut().zip(&self.p) {
            *wi += pi;
        }
        Ok(w)
    }
}

/// Elementwise elastance `eps(w_i)`.
pub fn elastance(params: &ElastanceParams, w: &[f64]) -> Result<Vec<f64>> {
    check_len("elastance", params.neurons(), w.len())?;
    Ok(w.iter()
        .enumerate()
        .map(|(i, &wi)| params.kind.value(wi, params.k(i)))
        .collect())
}

/// Elementwise `d eps / d w_i`.
pub fn elastance_derivative(params: &ElastanceParams, w: &[f64]) -> Result<Vec<f64>> {
    check_len("elastance_derivative", params.neurons(), w.len())?;
    Ok(w.iter()
        .enumerate()
        .map(|(i, &wi)| params.kind.derivative(wi, params.k(i)))
        .collect())
}
