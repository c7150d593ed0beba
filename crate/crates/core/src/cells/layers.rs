//! Linear readout, the affine state encoder and the MLP vector field of the
//! Neural-ODE baseline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cells::uniform_matrix;
use crate::error::{check_len, Result};
use crate::linalg::Matrix;
use crate::math::tanh_act;

/// Linear readout `o = Q h + bias`, `Q` is `K x m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputLayer {
    pub q: Matrix,
    pub bias: Vec<f64>,
}

impl OutputLayer {
    pub fn new(q: Matrix) -> Self {
        let k = q.rows();
        Self {
            q,
            bias: vec![0.0; k],
        }
    }

    pub fn init(outputs: usize, m: usize, rng: &mut impl Rng) -> Self {
        let half = 1.0 / (m.max(1) as f64).sqrt();
        Self::new(uniform_matrix(rng, outputs, m, half))
    }

    pub fn outputs(&self) -> usize {
        self.q.rows()
    }

    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        check_len("OutputLayer::apply", self.q.cols(), h.len())?;
        let mut o = self.q.matvec(h);
        for (oi, bi) in o.iter_mut().zip(&self.bias) {
            *oi += bi;
        }
        Ok(o)
    }
}

/// Affine map `z = W x + c` from an observed state to the hidden state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    /// `m x d`
    pub w: Matrix,
    pub bias: Vec<f64>,
}

impl AffineMap {
    pub fn init(m: usize, d: usize, rng: &mut impl Rng) -> Self {
        let half = 1.0 / (d.max(1) as f64).sqrt();
        Self {
            w: uniform_matrix(rng, m, d, half),
            bias: vec![0.0; m],
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("AffineMap::apply", self.w.cols(), x.len())?;
        let mut z = self.w.matvec(x);
        for (zi, bi) in z.iter_mut().zip(&self.bias) {
            *zi += bi;
        }
        Ok(z)
    }
}

/// Vector field `dx/dt = W3 tanh(W2 tanh(W1 x + b1) + b2) + b3` of the
/// Neural-ODE baseline. Matrices are stored `out x in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpOdeParams {
    pub w1: Matrix,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub w3: Matrix,
    pub b3: Vec<f64>,
}

impl MlpOdeParams {
    /// `d -> width -> width -> d`, weights `U[-1/sqrt(fan_in), 1/sqrt(fan_in)]`,
    /// zero biases.
    pub fn init(d: usize, width: usize, rng: &mut impl Rng) -> Self {
        let h1 = 1.0 / (d.max(1) as f64).sqrt();
        let h2 = 1.0 / (width.max(1) as f64).sqrt();
        Self {
            w1: uniform_matrix(rng, width, d, h1),
            b1: vec![0.0; width],
            w2: uniform_matrix(rng, width, width, h2),
            b2: vec![0.0; width],
            w3: uniform_matrix(rng, d, width, h2),
            b3: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn width(&self) -> usize {
        self.w1.rows()
    }

    pub fn derivative(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("MlpOdeParams::derivative", self.dim(), x.len())?;
        let layer = |w: &Matrix, b: &[f64], v: &[f64]| -> Vec<f64> {
            w.matvec(v).into_iter().zip(b).map(|(z, b)| z + b).collect()
        };
        let z1: Vec<f64> = layer(&self.w1, &self.b1, x)
            .into_iter()
            .map(tanh_act)
            .collect();
        let z2: Vec<f64> = layer(&self.w2, &self.b2, &z1)
            .into_iter()
            .map(tanh_act)
            .collect();
        Ok(layer(&self.w3, &self.b3, &z2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn output_layer_applies_q_and_bias() {
        let mut out = OutputLayer::new(Matrix::from_rows(&[vec![1.0, -2.0]]).unwrap());
        out.bias = vec![0.5];
        assert_eq!(out.apply(&[3.0, 1.0]).unwrap(), vec![1.5]);
        assert!(out.apply(&[1.0]).is_err());
    }

    #[test]
    fn neural_ode_parameter_count() {
        let p = MlpOdeParams::init(2, 32, &mut ChaCha8Rng::seed_from_u64(0));
        let count = p.w1.as_slice().len()
            + p.b1.len()
            + p.w2.as_slice().len()
            + p.b2.len()
            + p.w3.as_slice().len()
            + p.b3.len();
        assert_eq!(count, 2 * 32 + 32 + 32 * 32 + 32 + 32 * 2 + 2);
    }
}
