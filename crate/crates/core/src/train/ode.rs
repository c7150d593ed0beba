use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{left_pseudo_inverse, Matrix};
use crate::math::ElastanceKind;
use crate::model::{Model, ModelKind, ModelSpec, SequenceInput};
use crate::solvers::{DopriConfig, SolverConfig};
use crate::tasks::{make_windows_with, OdeSystem, Trajectory, Window};
use crate::train::batch::batch_gradient;
use crate::train::config::{Budget, TrainingConfig};
use crate::train::curve::{LossCurve, LossRecord};
use crate::train::loss::{loss, loss_gradient, LossKind};
use crate::train::optim::{clip_by_norm, scheduled_lr, Adam};

/// Clock the model integrates in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// The trajectory's own time stamps.
    Physical,
    /// One unit per mean sampling interval.
    SampleInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeTaskConfig {
    /// `Lrc` or `NeuralOde`.
    pub model: ModelKind,
    /// LRC hidden size.
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_elastance")]
    pub elastance: ElastanceKind,
    pub time_unit: TimeUnit,
    /// Model time per unit of `time_unit`.
    #[serde(default = "default_scale")]
    pub time_scale: f64,
    /// Training integrator; its `dt` is replaced per step by the window intervals.
    pub solver: SolverConfig,
    /// Integrator for the full-trajectory evaluation.
    pub eval_solver: SolverConfig,
    /// Start the readout as the pseudo-inverse of the encoder, so the
    /// untrained model reproduces the initial observation.
    #[serde(default)]
    pub decoder_pinv: bool,
    /// Drive the LRC with its own previous readout.
    #[serde(default)]
    pub feedback: bool,
    pub training: TrainingConfig,
}

fn default_hidden() -> usize {
    16
}

fn default_scale() -> f64 {
    1.0
}

fn default_elastance() -> ElastanceKind {
    ElastanceKind::Symmetric
}

impl OdeTaskConfig {
    /// LRC defaults: 16 hidden states, explicit Euler per sample interval.
    pub fn lrc(system: OdeSystem, seed: u64) -> Self {
        Self {
            model: ModelKind::Lrc,
            hidden: default_hidden(),
            elastance: default_elastance(),
            time_unit: TimeUnit::SampleInterval,
            time_scale: 1.0,
            solver: SolverConfig::explicit_euler(1, 1.0),
            eval_solver: SolverConfig::explicit_euler(1, 1.0),
            decoder_pinv: true,
            feedback: false,
            training: Self::training(system, seed),
        }
    }

    /// Neural-ODE defaults: RK4 for training, Dopri45 for evaluation.
    pub fn neural_ode(system: OdeSystem, seed: u64) -> Self {
        Self {
            model: ModelKind::NeuralOde,
            hidden: 0,
            elastance: default_elastance(),
            time_unit: TimeUnit::Physical,
            time_scale: 1.0,
            // non-adaptive schemes integrate the baseline with RK4
            solver: SolverConfig::explicit_euler(1, 1.0),
            eval_solver: SolverConfig::dopri45(1.0, DopriConfig::default()),
            decoder_pinv: false,
            feedback: false,
            training: Self::training(system, seed),
        }
    }

    fn training(system: OdeSystem, seed: u64) -> TrainingConfig {
        TrainingConfig {
            budget: Budget::Iterations(system.iteration_budget()),
            seed,
            ..TrainingConfig::default()
        }
    }

    pub fn for_kind(kind: ModelKind, system: OdeSystem, seed: u64) -> Result<Self> {
        match kind {
            ModelKind::Lrc => Ok(Self::lrc(system, seed)),
            ModelKind::NeuralOde => Ok(Self::neural_ode(system, seed)),
            other => Err(Error::InvalidArgument(format!(
                "ODE tasks train lrc or neural_ode, not {other}"
            ))),
        }
    }
}

/// Untrained model for a `d`-dimensional system.
pub fn build_ode_model(cfg: &OdeTaskConfig, d: usize, seed: u64) -> Result<Model> {
    match cfg.model {
        ModelKind::Lrc => {
            let n = if cfg.feedback { d } else { 0 };
            let spec = ModelSpec::new(ModelKind::Lrc, cfg.hidden, n, d)
                .with_elastance(cfg.elastance)
                .with_encoder(d);
            let mut model = Model::init(spec, seed)?;
            if cfg.decoder_pinv {
                let enc = model.encoder.as_ref().expect("encoder requested");
                let q = left_pseudo_inverse(&enc.w)?;
                let out = model.output.as_mut().expect("LRC readout");
                out.q = q;
                out.bias.iter_mut().for_each(|b| *b = 0.0);
            }
            Ok(model)
        }
        ModelKind::NeuralOde => Model::init(ModelSpec::new(ModelKind::NeuralOde, d, 0, d), seed),
        other => Err(Error::InvalidArgument(format!(
            "ODE tasks train lrc or neural_ode, not {other}"
        ))),
    }
}

fn model_intervals(traj: &Trajectory, unit: TimeUnit, scale: f64) -> Vec<f64> {
    let dt = traj.dt();
    let per_unit = match unit {
        TimeUnit::Physical => scale,
        TimeUnit::SampleInterval => {
            let span = traj.times()[traj.len() - 1] - traj.times()[0];
            scale * dt.len() as f64 / span
        }
    };
    dt.into_iter().map(|d| d * per_unit).collect()
}

fn rollout(cfg: &OdeTaskConfig, x0: Vec<f64>, steps: usize, dt: Vec<f64>) -> SequenceInput {
    if cfg.feedback && cfg.model == ModelKind::Lrc {
        SequenceInput::closed_loop(x0, steps, Some(dt))
    } else {
        SequenceInput::rollout(x0, steps, Some(dt))
    }
}

/// Rollout from the first observation across the whole trajectory, in model time.
pub fn rollout_input(cfg: &OdeTaskConfig, traj: &Trajectory) -> SequenceInput {
    let intervals = model_intervals(traj, cfg.time_unit, cfg.time_scale);
    rollout(cfg, traj.row(0).to_vec(), traj.len() - 1, intervals)
}

/// MSE of a rollout from the first observation over the whole trajectory.
pub fn evaluate_rollout(model: &Model, cfg: &OdeTaskConfig, traj: &Trajectory) -> Result<f64> {
    let pred = model.predict(&cfg.eval_solver, &rollout_input(cfg, traj))?;
    loss(LossKind::Mse, &pred, &traj.values().transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedOde {
    pub model: Model,
    pub curve: LossCurve,
    /// Full-trajectory loss of the untrained model.
    pub initial_test_loss: f64,
    pub test_loss: f64,
}

/// Trains on random windows with the observed first row as initial state and
/// evaluates by integrating from the first observation across the whole trajectory.
pub fn train_ode_task(traj: &Trajectory, cfg: &OdeTaskConfig) -> Result<TrainedOde> {
    let tc = &cfg.training;
    tc.validate()?;
    cfg.solver.validate()?;
    cfg.eval_solver.validate()?;
    let iterations = match tc.budget {
        Budget::Iterations(n) => n,
        Budget::Epochs(_) => {
            return Err(Error::InvalidArgument(
                "ODE tasks use an iteration budget".into(),
            ));
        }
    };
    if traj.len() < 2 || tc.seq_len > traj.len() {
        return Err(Error::InvalidArgument(format!(
            "trajectory of {} rows cannot provide windows of {}",
            traj.len(),
            tc.seq_len
        )));
    }
    let mut model = build_ode_model(cfg, traj.dim(), tc.seed)?;
    let intervals = model_intervals(traj, cfg.time_unit, cfg.time_scale);
    let initial_test_loss = match evaluate_rollout(&model, cfg, traj) {
        Err(Error::NonFiniteActivation { .. }) => f64::INFINITY,
        other => other?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut opt = Adam::new(tc.optimizer, model.param_count(), tc.weight_decay);
    let mut curve = LossCurve::default();
    let started = Instant::now();
    let build = |w: &Window| {
        let len = w.targets.cols();
        rollout(
            cfg,
            w.x0.clone(),
            len - 1,
            intervals[w.start..w.start + len - 1].to_vec(),
        )
    };
    let objective = |w: &Window, out: &Matrix| -> Result<(f64, Matrix)> {
        Ok((
            loss(LossKind::Mse, out, &w.targets)?,
            loss_gradient(LossKind::Mse, out, &w.targets)?,
        ))
    };
    for it in 0..iterations {
        let windows = make_windows_with(traj, tc.seq_len, tc.batch_size, &mut rng)?;
        let (batch_loss, grad) =
            match batch_gradient(&model, &cfg.solver, &windows, build, objective) {
                Ok(r) => r,
                Err(Error::NonFiniteActivation { .. } | Error::EulerDiverged { .. }) => {
                    return Err(Error::Diverged { iteration: it });
                }
                Err(e) => return Err(e),
            };
        if !batch_loss.is_finite() {
            return Err(Error::Diverged { iteration: it });
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
            scheduled_lr(tc.learning_rate, tc.schedule, it, iterations),
        )?;
        model.set_flat_params(&params)?;
        let eval_loss = if tc.eval_every > 0 && (it + 1) % tc.eval_every == 0 {
            Some(evaluate_rollout(&model, cfg, traj)?)
        } else {
            None
        };
        curve.push(LossRecord {
            iteration: it,
            train_loss: batch_loss,
            eval_loss,
            wall_time_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    let test_loss = if iterations == 0 {
        initial_test_loss
    } else {
        evaluate_rollout(&model, cfg, traj)?
    };
    Ok(TrainedOde {
        model,
        curve,
        initial_test_loss,
        test_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::generate;

    fn short(system: OdeSystem, kind: ModelKind, iterations: usize) -> (Trajectory, OdeTaskConfig) {
        let traj = generate(system, &system.default_initial_state(), 2.0, 120).unwrap();
        let mut cfg = OdeTaskConfig::for_kind(kind, system, 3).unwrap();
        cfg.hidden = 6;
        cfg.training.budget = Budget::Iterations(iterations);
        cfg.training.batch_size = 4;
        (traj, cfg)
    }

    #[test]
    fn zero_iterations_reports_the_untrained_loss() {
        for kind in [ModelKind::Lrc, ModelKind::NeuralOde] {
            let (traj, cfg) = short(OdeSystem::Spiral, kind, 0);
            let out = train_ode_task(&traj, &cfg).unwrap();
            let fresh = build_ode_model(&cfg, 2, cfg.training.seed).unwrap();
            assert_eq!(out.model, fresh);
            assert!(out.curve.is_empty());
            assert_eq!(
                out.test_loss,
                evaluate_rollout(&fresh, &cfg, &traj).unwrap()
            );
            assert_eq!(out.test_loss, out.initial_test_loss);
        }
    }

    #[test]
    fn pseudo_inverse_readout_reproduces_the_first_observation() {
        let (traj, cfg) = short(OdeSystem::Duffing, ModelKind::Lrc, 0);
        let model = build_ode_model(&cfg, 2, 11).unwrap();
        let seq = SequenceInput::rollout(traj.row(0).to_vec(), 3, None);
        let out = model.predict(&cfg.solver, &seq).unwrap();
        for (r, x) in traj.row(0).iter().enumerate() {
            assert!((out.get(r, 0) - x).abs() < 1e-12);
        }
    }

    #[test]
    fn default_lrc_has_the_expected_size() {
        let cfg = OdeTaskConfig::lrc(OdeSystem::Spiral, 0);
        assert_eq!(build_ode_model(&cfg, 2, 0).unwrap().param_count(), 1426);
        let cfg = OdeTaskConfig::neural_ode(OdeSystem::Spiral, 0);
        assert_eq!(build_ode_model(&cfg, 2, 0).unwrap().param_count(), 1218);
        assert!(OdeTaskConfig::for_kind(ModelKind::Gru, OdeSystem::Spiral, 0).is_err());
    }

    #[test]
    fn seeded_training_is_reproducible() {
        let (traj, cfg) = short(OdeSystem::PeriodicLv, ModelKind::Lrc, 5);
        let a = train_ode_task(&traj, &cfg).unwrap();
        let b = train_ode_task(&traj, &cfg).unwrap();
        assert_eq!(a.model.flat_params(), b.model.flat_params());
        assert_eq!(a.test_loss, b.test_loss);
        assert_eq!(a.curve.len(), 5);
    }

    #[test]
    fn divergence_reports_the_iteration() {
        // the baseline's vector field is bounded, so the state reaches ~1e200
        // and the squared error overflows
        let (traj, mut cfg) = short(OdeSystem::Spiral, ModelKind::NeuralOde, 3);
        cfg.eval_solver = cfg.solver.clone();
        cfg.time_scale = 1e200;
        let r = train_ode_task(&traj, &cfg);
        assert!(matches!(r, Err(Error::Diverged { iteration: 0 })), "{r:?}");
    }

    #[test]
    fn training_reduces_the_window_loss() {
        let (traj, mut cfg) = short(OdeSystem::Spiral, ModelKind::Lrc, 300);
        cfg.training.learning_rate = 1e-2;
        let out = train_ode_task(&traj, &cfg).unwrap();
        assert!(out.curve.trailing_mean(50).unwrap() < 0.5 * out.curve.initial_loss().unwrap());
    }
}
