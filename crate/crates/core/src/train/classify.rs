use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::ElastanceKind;
use crate::model::{Model, ModelKind, ModelSpec, SequenceInput};
use crate::solvers::SolverConfig;
use crate::tasks::{LabeledSequence, SequenceDataset};
use crate::train::batch::batch_gradient;
use crate::train::config::{Budget, TrainingConfig};
use crate::train::curve::{LossCurve, LossRecord};
use crate::train::loss::{argmax, softmax_cross_entropy};
use crate::train::optim::{clip_by_norm, scheduled_lr, Adam};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceTaskConfig {
    pub model: ModelKind,
    pub hidden: usize,
    #[serde(default)]
    pub elastance: Option<ElastanceKind>,
    pub solver: SolverConfig,
    /// Feed the observed intervals (times `dt_scale`) to the model; when
    /// false every step uses `solver.dt`.
    #[serde(default = "default_true")]
    pub use_dt: bool,
    #[serde(default = "default_scale")]
    pub dt_scale: f64,
    pub training: TrainingConfig,
}

fn default_true() -> bool {
    true
}

fn default_scale() -> f64 {
    1.0
}

impl SequenceTaskConfig {
    pub fn new(
        model: ModelKind,
        hidden: usize,
        elastance: Option<ElastanceKind>,
        epochs: usize,
        seed: u64,
    ) -> Self {
        Self {
            model,
            hidden,
            elastance,
            solver: SolverConfig::explicit_euler(1, 1.0),
            use_dt: true,
            dt_scale: 1.0,
            training: TrainingConfig {
                budget: Budget::Epochs(epochs),
                seed,
                ..TrainingConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub test_accuracy: f64,
    /// Test accuracy after each epoch.
    pub test_accuracy_per_epoch: Vec<f64>,
    pub curve: LossCurve,
}

pub fn sequence_input(seq: &LabeledSequence, cfg: &SequenceTaskConfig) -> SequenceInput {
    let mut input = SequenceInput::new(seq.values.iter().map(|v| vec![*v]).collect());
    if cfg.use_dt {
        input.dt = Some(seq.dt.iter().map(|d| d * cfg.dt_scale).collect());
    }
    input
}

fn terminal_logits(out: &Matrix) -> Vec<f64> {
    out.column(out.cols() - 1)
}

pub fn evaluate_accuracy(
    model: &Model,
    cfg: &SequenceTaskConfig,
    dataset: &SequenceDataset,
    indices: &[usize],
) -> Result<f64> {
    if indices.is_empty() {
        return Ok(f64::NAN);
    }
    let mut correct = 0usize;
    for &i in indices {
        let s = &dataset.sequences[i];
        let out = model.predict(&cfg.solver, &sequence_input(s, cfg))?;
        correct += usize::from(argmax(&terminal_logits(&out)) == s.label);
    }
    Ok(correct as f64 / indices.len() as f64)
}

/// Classification from the terminal readout through a softmax.
pub fn train_sequence_task(
    dataset: &SequenceDataset,
    cfg: &SequenceTaskConfig,
) -> Result<(Model, ClassificationMetrics)> {
    let tc = &cfg.training;
    tc.validate()?;
    cfg.solver.validate()?;
    let epochs = match tc.budget {
        Budget::Epochs(n) => n,
        Budget::Iterations(_) => {
            return Err(Error::InvalidArgument(
                "sequence tasks use an epoch budget".into(),
            ));
        }
    };
    let classes = dataset.classes;
    if let Some(s) = dataset.sequences.iter().find(|s| s.label >= classes) {
        return Err(Error::InvalidArgument(format!(
            "label {} does not fit {classes} model outputs",
            s.label
        )));
    }
    if dataset.train.is_empty() {
        return Err(Error::InvalidArgument("empty training split".into()));
    }
    let mut spec = ModelSpec::new(cfg.model, cfg.hidden, 1, classes);
    spec.elastance = cfg.elastance;
    let mut model = Model::init(spec, tc.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut opt = Adam::new(tc.optimizer, model.param_count(), tc.weight_decay);
    let batches_per_epoch = dataset.train.len().div_ceil(tc.batch_size);
    let horizon = epochs * batches_per_epoch;
    let mut curve = LossCurve::default();
    let mut per_epoch = Vec::with_capacity(epochs);
    let started = Instant::now();
    let build = |&i: &usize| sequence_input(&dataset.sequences[i], cfg);
    let objective = |&i: &usize, out: &Matrix| -> Result<(f64, Matrix)> {
        let (l, g) = softmax_cross_entropy(&terminal_logits(out), dataset.sequences[i].label)?;
        let mut d = Matrix::zeros(out.rows(), out.cols());
        for (r, v) in g.into_iter().enumerate() {
            d.set(r, out.cols() - 1, v);
        }
        Ok((l, d))
    };
    let mut order = dataset.train.clone();
    let mut iteration = 0;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(tc.batch_size) {
            let (batch_loss, grad) =
                match batch_gradient(&model, &cfg.solver, chunk, build, objective) {
                    Ok(r) => r,
                    Err(Error::NonFiniteActivation { .. } | Error::EulerDiverged { .. }) => {
                        return Err(Error::Diverged { iteration });
                    }
                    Err(e) => return Err(e),
                };
            if !batch_loss.is_finite() {
                return Err(Error::Diverged { iteration });
            }
            grad.check_finite()?;
            let mut flat = grad.flat();
            if let Some(c) = tc.gradient_clip {
                clip_by_norm(&mut flat, c);
            }
            let mut params = model.flat_params();
            opt.step(
                &mut params,
                &flat,
                scheduled_lr(tc.learning_rate, tc.schedule, iteration, horizon),
            )?;
            model.set_flat_params(&params)?;
            curve.push(LossRecord {
                iteration,
                train_loss: batch_loss,
                eval_loss: None,
                wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
            });
            iteration += 1;
        }
        per_epoch.push(evaluate_accuracy(&model, cfg, dataset, &dataset.test)?);
    }
    let metrics = ClassificationMetrics {
        train_accuracy: evaluate_accuracy(&model, cfg, dataset, &dataset.train)?,
        val_accuracy: evaluate_accuracy(&model, cfg, dataset, &dataset.val)?,
        test_accuracy: evaluate_accuracy(&model, cfg, dataset, &dataset.test)?,
        test_accuracy_per_epoch: per_epoch,
        curve,
    };
    Ok((model, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::{
        synthetic_irregular_classification, synthetic_irregular_classification_with,
        ClassificationConfig,
    };

    fn small_cfg(epochs: usize) -> SequenceTaskConfig {
        let mut cfg = SequenceTaskConfig::new(
            ModelKind::Lrcu,
            4,
            Some(ElastanceKind::Symmetric),
            epochs,
            7,
        );
        cfg.training.batch_size = 8;
        cfg
    }

    #[test]
    fn single_class_is_always_right() {
        let mut ds = synthetic_irregular_classification(20, 1).unwrap();
        ds.classes = 1;
        ds.sequences.iter_mut().for_each(|s| s.label = 0);
        let (_, metrics) = train_sequence_task(&ds, &small_cfg(0)).unwrap();
        assert_eq!(metrics.test_accuracy, 1.0);
        assert_eq!(metrics.train_accuracy, 1.0);
    }

    #[test]
    fn label_outside_outputs_is_rejected() {
        let mut ds = synthetic_irregular_classification(20, 1).unwrap();
        ds.sequences[3].label = 5;
        assert!(matches!(
            train_sequence_task(&ds, &small_cfg(1)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn iteration_budget_is_rejected() {
        let ds = synthetic_irregular_classification(20, 1).unwrap();
        let mut cfg = small_cfg(1);
        cfg.training.budget = Budget::Iterations(3);
        assert!(train_sequence_task(&ds, &cfg).is_err());
    }

    #[test]
    fn uniform_dt_equals_explicit_overrides() {
        let data_cfg = ClassificationConfig {
            regular: true,
            ..ClassificationConfig::default()
        };
        let ds = synthetic_irregular_classification_with(30, 4, &data_cfg).unwrap();
        let mut uniform = small_cfg(2);
        uniform.use_dt = false;
        uniform.solver.dt = data_cfg.mean_dt;
        let overrides = small_cfg(2);
        let (a, ma) = train_sequence_task(&ds, &uniform).unwrap();
        let (b, mb) = train_sequence_task(&ds, &overrides).unwrap();
        assert_eq!(a.flat_params(), b.flat_params());
        let losses = |m: &ClassificationMetrics| {
            m.curve
                .records
                .iter()
                .map(|r| r.train_loss)
                .collect::<Vec<_>>()
        };
        assert_eq!(losses(&ma), losses(&mb));
    }

    #[test]
    fn seeded_runs_are_identical() {
        let ds = synthetic_irregular_classification(30, 2).unwrap();
        let (a, _) = train_sequence_task(&ds, &small_cfg(2)).unwrap();
        let (b, _) = train_sequence_task(&ds, &small_cfg(2)).unwrap();
        assert_eq!(a.flat_params(), b.flat_params());
        let mut other = small_cfg(2);
        other.training.seed = 8;
        let (c, _) = train_sequence_task(&ds, &other).unwrap();
        assert_ne!(a.flat_params(), c.flat_params());
    }
}
