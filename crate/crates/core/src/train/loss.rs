use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean over all `K x T` entries of the squared error.
    Mse,
    /// `(1/T) sum_t ||o_t - o*_t||_2`.
    MeanL2,
}

fn check_shapes(pred: &Matrix, target: &Matrix) -> Result<()> {
    if pred.shape() != target.shape() {
        return Err(Error::InvalidArgument(format!(
            "prediction shape {:?} differs from target shape {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    if pred.cols() == 0 || pred.rows() == 0 {
        return Err(Error::InvalidArgument("loss of an empty sequence".into()));
    }
    Ok(())
}

pub fn loss(kind: LossKind, pred: &Matrix, target: &Matrix) -> Result<f64> {
    check_shapes(pred, target)?;
    let (k, t) = pred.shape();
    Ok(match kind {
        LossKind::Mse => {
            let sum: f64 = pred
                .as_slice()
                .iter()
                .zip(target.as_slice())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            sum / (k * t) as f64
        }
        LossKind::MeanL2 => {
            (0..t)
                .map(|c| {
                    (0..k)
                        .map(|r| (pred.get(r, c) - target.get(r, c)).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .sum::<f64>()
                / t as f64
        }
    })
}

/// `d loss / d pred`. The MeanL2 gradient at a zero residual is taken as 0.
pub fn loss_gradient(kind: LossKind, pred: &Matrix, target: &Matrix) -> Result<Matrix> {
    check_shapes(pred, target)?;
    let (k, t) = pred.shape();
    Ok(match kind {
        LossKind::Mse => {
            let scale = 2.0 / (k * t) as f64;
            Matrix::from_fn(k, t, |r, c| scale * (pred.get(r, c) - target.get(r, c)))
        }
        LossKind::MeanL2 => {
            let norms: Vec<f64> = (0..t)
                .map(|c| {
                    (0..k)
                        .map(|r| (pred.get(r, c) - target.get(r, c)).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            Matrix::from_fn(k, t, |r, c| {
                if norms[c] == 0.0 {
                    0.0
                } else {
                    (pred.get(r, c) - target.get(r, c)) / (norms[c] * t as f64)
                }
            })
        }
    })
}

/// Softmax cross-entropy of one logit vector; returns `(loss, d loss / d logits)`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::InvalidArgument(format!(
            "label {label} out of range for {} outputs",
            logits.len()
        )));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() + max - logits[label];
    let grad = exps
        .iter()
        .enumerate()
        .map(|(i, e)| e / sum - if i == label { 1.0 } else { 0.0 })
        .collect();
    Ok((loss, grad))
}

pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| {
            if x > bv {
                (i, x)
            } else {
                (bi, bv)
            }
        })
        .0
}
