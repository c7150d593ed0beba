//! Losses, optimizers and the training loops for the ODE benchmarks and the
//! irregularly sampled classification task.

mod batch;
mod classify;
mod config;
mod curve;
mod loss;
mod ode;
mod optim;

pub use batch::batch_gradient;
pub use classify::{
    evaluate_accuracy, sequence_input, train_sequence_task, ClassificationMetrics,
    SequenceTaskConfig,
};
pub use config::{Budget, TrainingConfig};
pub use curve::{LossCurve, LossRecord};
pub use loss::{argmax, loss, loss_gradient, softmax_cross_entropy, LossKind};
pub use ode::{
    build_ode_model, evaluate_rollout, rollout_input, train_ode_task, OdeTaskConfig, TimeUnit,
    TrainedOde,
};
pub use optim::{
    clip_by_norm, scheduled_lr, Adam, OptimizerKind, Schedule, ADAM_EPS, BETA1, BETA2,
};
