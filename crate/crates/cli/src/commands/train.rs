use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lrc_core::analysis::default_h_bound;
use lrc_core::model::Model;
use lrc_core::tasks::{generate_default, synthetic_irregular_classification_with, Trajectory};
use lrc_core::train::{
    rollout_input, sequence_input, train_ode_task, train_sequence_task, LossCurve, OdeTaskConfig,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::mean_std;
use crate::config::{ClassificationExperiment, ExperimentConfig, OdeExperiment, TaskSpec};
use crate::error::CliResult;
use crate::paths;

pub const CHECKPOINT: &str = "checkpoint.json";
pub const CURVE: &str = "loss_curve.csv";
pub const METRICS: &str = "metrics.json";
pub const SUMMARY: &str = "summary.json";
pub const RESOLVED_CONFIG: &str = "config.json";

#[derive(Debug, Clone, Serialize)]
pub struct RunMetrics {
    pub seed: u64,
    /// Last recorded training loss.
    pub final_train: f64,
    /// Test MSE for ODE tasks, test accuracy for classification.
    pub final_eval: f64,
    pub eval_metric: &'static str,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, Value>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Summary {
    eval_metric: &'static str,
    seeds: Vec<u64>,
    final_eval: Vec<f64>,
    mean: f64,
    std: f64,
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join(format!("seed_{seed}"))
}

pub fn run(config_path: &Path, output_override: Option<&Path>) -> CliResult<Vec<RunMetrics>> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(dir) = output_override {
        cfg.output_dir = dir.to_path_buf();
    }
    let out = paths::resolve(&cfg.output_dir);
    paths::create_dir(&out)?;
    paths::write_json(&out.join(RESOLVED_CONFIG), &cfg)?;
    let results: Vec<CliResult<RunMetrics>> = match &cfg.task {
        TaskSpec::Ode(task) => {
            let traj = load_trajectory(task)?;
            cfg.seeds
                .par_iter()
                .map(|&s| train_ode_seed(task, &traj, s, &out))
                .collect()
        }
        TaskSpec::Classification(task) => cfg
            .seeds
            .par_iter()
            .map(|&s| train_classification_seed(task, s, &out))
            .collect(),
    };
    let metrics = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let evals: Vec<f64> = metrics.iter().map(|m| m.final_eval).collect();
    let (mean, std) = mean_std(&evals);
    let summary = Summary {
        eval_metric: metrics[0].eval_metric,
        seeds: cfg.seeds.clone(),
        final_eval: evals,
        mean,
        std,
    };
    paths::write_json(&out.join(SUMMARY), &summary)?;
    println!(
        "{}: {mean:.6e} +- {std:.2e} over {} seed(s)",
        summary.eval_metric,
        metrics.len()
    );
    Ok(metrics)
}

fn load_trajectory(task: &OdeExperiment) -> CliResult<Trajectory> {
    Ok(match &task.data {
        Some(path) => Trajectory::load_csv(&paths::resolve(path))?,
        None => generate_default(task.system)?,
    })
}

fn write_run(
    out: &Path,
    model: &Model,
    seed: u64,
    meta: BTreeMap<String, Value>,
    curve: &LossCurve,
    metrics: &RunMetrics,
) -> CliResult<()> {
    let dir = seed_dir(out, seed);
    paths::create_dir(&dir)?;
    model
        .to_checkpoint(seed, meta)
        .save(&dir.join(CHECKPOINT))?;
    curve.save_csv(&dir.join(CURVE))?;
    paths::write_json(&dir.join(METRICS), metrics)
}

fn train_ode_seed(
    task: &OdeExperiment,
    traj: &Trajectory,
    seed: u64,
    out: &Path,
) -> CliResult<RunMetrics> {
    let mut cfg: OdeTaskConfig = task.config.clone().expect("resolved config");
    cfg.training.seed = seed;
    let start = Instant::now();
    let trained = train_ode_task(traj, &cfg)?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let mut meta = BTreeMap::new();
    meta.insert("task".into(), json!({ "ode": task.system.name() }));
    if trained.model.liquid().is_some() {
        let seq = rollout_input(&cfg, traj);
        let h_bound =
            default_h_bound(&trained.model, &cfg.eval_solver, std::slice::from_ref(&seq))?;
        // the certified bound covers one explicit-Euler substep
        let step = seq.dt.as_ref().map_or(cfg.eval_solver.dt, |d| d[0])
            / cfg.eval_solver.unfoldings as f64;
        meta.insert("h_bound".into(), json!(h_bound));
        meta.insert("dt".into(), json!(step));
    }
    let mut extra = BTreeMap::new();
    extra.insert("initial_eval".into(), json!(trained.initial_test_loss));
    extra.insert("iterations".into(), json!(trained.curve.len()));
    let metrics = RunMetrics {
        seed,
        final_train: trained
            .curve
            .records
            .last()
            .map_or(f64::NAN, |r| r.train_loss),
        final_eval: trained.test_loss,
        eval_metric: "test_mse",
        extra,
        wall_time_ms: wall,
    };
    write_run(out, &trained.model, seed, meta, &trained.curve, &metrics)?;
    Ok(metrics)
}

fn train_classification_seed(
    task: &ClassificationExperiment,
    seed: u64,
    out: &Path,
) -> CliResult<RunMetrics> {
    let data =
        synthetic_irregular_classification_with(task.n_sequences, task.data_seed, &task.generator)?;
    let mut cfg = task.config.clone();
    cfg.training.seed = seed;
    let start = Instant::now();
    let (model, m) = train_sequence_task(&data, &cfg)?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let mut meta = BTreeMap::new();
    meta.insert("task".into(), json!("classification"));
    if model.liquid().is_some() {
        let seqs: Vec<_> = data
            .split(&data.train)
            .into_iter()
            .map(|s| sequence_input(s, &cfg))
            .collect();
        meta.insert(
            "h_bound".into(),
            json!(default_h_bound(&model, &cfg.solver, &seqs)?),
        );
    }
    let mut extra = BTreeMap::new();
    extra.insert("train_accuracy".into(), json!(m.train_accuracy));
    extra.insert("val_accuracy".into(), json!(m.val_accuracy));
    extra.insert(
        "test_accuracy_per_epoch".into(),
        json!(m.test_accuracy_per_epoch),
    );
    let metrics = RunMetrics {
        seed,
        final_train: m.curve.records.last().map_or(f64::NAN, |r| r.train_loss),
        final_eval: m.test_accuracy,
        eval_metric: "test_accuracy",
        extra,
        wall_time_ms: wall,
    };
    write_run(out, &model, seed, meta, &m.curve, &metrics)?;
    Ok(metrics)
}
