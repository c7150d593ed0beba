//! Two-class irregularly sampled oscillations: slow versus fast sinusoids
//! observed at exponentially distributed intervals.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassificationConfig {
    pub seq_len: usize,
    /// Mean observation interval.
    pub mean_dt: f64,
    /// Smallest observation interval.
    pub min_dt: f64,
    /// Frequency ranges (Hz) of the two classes.
    pub slow_hz: (f64, f64),
    pub fast_hz: (f64, f64),
    pub amplitude: (f64, f64),
    pub noise_std: f64,
    /// Degenerate mode: every interval equals `mean_dt`.
    pub regular: bool,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        Self {
            seq_len: 32,
            mean_dt: 0.1,
            min_dt: 0.02,
            slow_hz: (0.2, 0.4),
            fast_hz: (0.8, 1.2),
            amplitude: (0.8, 1.2),
            noise_std: 0.01,
            regular: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub values: Vec<f64>,
    /// `dt[t]` is the interval that ends at observation `t`.
    pub dt: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDataset {
    pub sequences: Vec<LabeledSequence>,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub classes: usize,
}

impl SequenceDataset {
    pub fn split(&self, indices: &[usize]) -> Vec<&LabeledSequence> {
        indices.iter().map(|&i| &self.sequences[i]).collect()
    }
}

fn uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

pub fn synthetic_irregular_classification(
    n_sequences: usize,
    seed: u64,
) -> Result<SequenceDataset> {
    synthetic_irregular_classification_with(n_sequences, seed, &ClassificationConfig::default())
}

pub fn synthetic_irregular_classification_with(
    n_sequences: usize,
    seed: u64,
    cfg: &ClassificationConfig,
) -> Result<SequenceDataset> {
    if n_sequences < 2 {
        return Err(Error::InvalidArgument("need at least two sequences".into()));
    }
    if cfg.seq_len == 0 || !(cfg.mean_dt > cfg.min_dt) || cfg.min_dt < 0.0 {
        return Err(Error::InvalidArgument(
            "invalid classification config".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(1.0 / (cfg.mean_dt - cfg.min_dt))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let noise =
        Normal::new(0.0, cfg.noise_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut sequences = Vec::with_capacity(n_sequences);
    for i in 0..n_sequences {
        let label = i % 2;
        let freq = uniform(&mut rng, if label == 0 { cfg.slow_hz } else { cfg.fast_hz });
        let amp = uniform(&mut rng, cfg.amplitude);
        let phase = uniform(&mut rng, (0.0, std::f64::consts::TAU));
        let mut t = 0.0;
        let mut values = Vec::with_capacity(cfg.seq_len);
        let mut dt = Vec::with_capacity(cfg.seq_len);
        for _ in 0..cfg.seq_len {
            let d = if cfg.regular {
                cfg.mean_dt
            } else {
                cfg.min_dt + gap.sample(&mut rng)
            };
            t += d;
            dt.push(d);
            values.push(
                amp * (std::f64::consts::TAU * freq * t + phase).sin() + noise.sample(&mut rng),
            );
        }
        sequences.push(LabeledSequence { values, dt, label });
    }
    let mut order: Vec<usize> = (0..n_sequences).collect();
    order.shuffle(&mut rng);
    let n_train = (n_sequences * 8).div_ceil(10).min(n_sequences);
    let n_val = (n_sequences / 10).min(n_sequences - n_train);
    let test = order.split_off(n_train + n_val);
    let val = order.split_off(n_train);
    Ok(SequenceDataset {
        sequences,
        train: order,
        val,
        test,
        classes: 2,
    })
}
