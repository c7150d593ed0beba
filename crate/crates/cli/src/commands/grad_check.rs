use std::path::Path;

use lrc_core::autodiff::{gradient_pair, GRAD_CHECK_TOL};
use lrc_core::model::{InitialState, Model, ModelKind, ModelSpec, SequenceInput};
use lrc_core::solvers::SolverConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::parse_json;
use crate::error::{CliError, CliResult};
use crate::paths;

pub const MAX_STATES: usize = 8;
pub const MAX_STEPS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradCheckConfig {
    pub model: ModelSpec,
    #[serde(default = "default_solver")]
    pub solver: SolverConfig,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    /// Draw a different interval for every step.
    #[serde(default = "default_true")]
    pub irregular_dt: bool,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

fn default_solver() -> SolverConfig {
    SolverConfig::explicit_euler(1, 0.5)
}

fn default_steps() -> usize {
    6
}

fn default_true() -> bool {
    true
}

fn default_fd_step() -> f64 {
    lrc_core::autodiff::FD_STEP
}

/// Random inputs, intervals and initial state for a gradient check.
pub fn random_sequence(
    spec: &ModelSpec,
    steps: usize,
    irregular: bool,
    rng: &mut impl Rng,
) -> SequenceInput {
    let inputs = (0..steps)
        .map(|_| (0..spec.n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let mut seq = SequenceInput::new(inputs);
    if irregular {
        seq.dt = Some((0..steps).map(|_| rng.random_range(0.2..1.0)).collect());
    }
    if spec.kind == ModelKind::NeuralOde {
        seq.initial =
            InitialState::Observation((0..spec.m).map(|_| rng.random_range(-1.0..1.0)).collect());
        seq.emit_initial = true;
    } else {
        seq.initial = InitialState::State(
            (0..spec.state_len())
                .map(|_| rng.random_range(-0.5..0.5))
                .collect(),
        );
    }
    seq
}

/// Runs the check, printing one line per tensor. `corrupt` adds 1 to the
/// first analytic entry of that tensor.
pub fn run(config_path: &Path, corrupt: Option<&str>) -> CliResult<()> {
    let cfg: GradCheckConfig = parse_json(&paths::read_to_string(config_path)?, config_path)?;
    if cfg.steps == 0 || cfg.steps > MAX_STEPS {
        return Err(CliError::Usage(format!(
            "steps must be in 1..={MAX_STEPS}, got {}",
            cfg.steps
        )));
    }
    if cfg.model.m > MAX_STATES {
        return Err(CliError::Usage(format!(
            "m must be <= {MAX_STATES}, got {}",
            cfg.model.m
        )));
    }
    cfg.model.validate()?;
    cfg.solver.validate()?;
    let model = Model::init(cfg.model, cfg.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let seq = random_sequence(&cfg.model, cfg.steps, cfg.irregular_dt, &mut rng);
    let (mut analytic, fd) = gradient_pair(&model, &cfg.solver, &seq, cfg.fd_step)?;
    if let Some(name) = corrupt {
        let t = analytic
            .get_mut(name)
            .ok_or_else(|| CliError::Usage(format!("no tensor named `{name}`")))?;
        if let Some(v) = t.values.first_mut() {
            *v += 1.0;
        }
    }
    let cmp = analytic.compare(&fd)?;
    println!("{:<20} {:>14}", "tensor", "max_rel_error");
    for (name, err) in &cmp.per_tensor {
        println!("{name:<20} {err:>14.3e}");
    }
    if cmp.max_rel_error <= GRAD_CHECK_TOL {
        println!(
            "PASS max relative error {:.3e} <= {GRAD_CHECK_TOL:e}",
            cmp.max_rel_error
        );
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "FAIL worst parameter {}[{}]: relative error {:.3e} > {GRAD_CHECK_TOL:e}",
            cmp.worst_tensor, cmp.worst_index, cmp.max_rel_error
        )))
    }
}
