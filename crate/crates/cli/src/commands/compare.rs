use std::path::Path;

use lrc_core::model::ModelKind;
use lrc_core::tasks::{OdeSystem, Trajectory};
use lrc_core::train::{train_ode_task, Budget, OdeTaskConfig};
use rayon::prelude::*;

use super::mean_std;
use crate::error::{CliError, CliResult};
use crate::paths;

pub struct CompareArgs<'a> {
    pub tasks: &'a str,
    pub models: &'a str,
    pub seeds: &'a [u64],
    pub data_dir: &'a Path,
    pub iterations: Option<usize>,
    pub out: Option<&'a Path>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub task: OdeSystem,
    pub model: ModelKind,
    pub mean: f64,
    pub std: f64,
    pub n_seeds: usize,
}

fn parse_list<T: std::str::FromStr<Err = lrc_core::Error>>(text: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect()
}

pub fn run(args: &CompareArgs) -> CliResult<Vec<CompareRow>> {
    let tasks: Vec<OdeSystem> = if args.tasks == "all" {
        OdeSystem::ALL.to_vec()
    } else {
        parse_list(args.tasks)?
    };
    let models: Vec<ModelKind> = parse_list(args.models)?;
    if args.seeds.is_empty() {
        return Err(CliError::Usage("--seeds must not be empty".into()));
    }
    let data_dir = paths::resolve(args.data_dir);
    let mut trajectories = Vec::with_capacity(tasks.len());
    for task in &tasks {
        let path = data_dir.join(format!("{}.csv", task.name()));
        if !path.exists() {
            return Err(CliError::Usage(format!(
                "missing task data {}; run `lrc gen-data {} {}` first",
                path.display(),
                task.name(),
                args.data_dir.display()
            )));
        }
        trajectories.push(Trajectory::load_csv(&path)?);
    }
    let mut jobs = Vec::new();
    for (ti, task) in tasks.iter().enumerate() {
        for model in &models {
            for &seed in args.seeds {
                let mut cfg = OdeTaskConfig::for_kind(*model, *task, seed)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                if let Some(n) = args.iterations {
                    cfg.training.budget = Budget::Iterations(n);
                }
                jobs.push((ti, cfg));
            }
        }
    }
    let losses: Vec<f64> = jobs
        .par_iter()
        .map(|(ti, cfg)| match train_ode_task(&trajectories[*ti], cfg) {
            Ok(t) => Ok(t.test_loss),
            Err(lrc_core::Error::Diverged { iteration }) => {
                eprintln!(
                    "{} {} seed {} diverged at iteration {iteration}",
                    tasks[*ti], cfg.model, cfg.training.seed
                );
                Ok(f64::INFINITY)
            }
            Err(e) => Err(CliError::from(e)),
        })
        .collect::<CliResult<_>>()?;
    let rows: Vec<CompareRow> = losses
        .chunks(args.seeds.len())
        .zip(
            tasks
                .iter()
                .flat_map(|t| models.iter().map(move |m| (*t, *m))),
        )
        .map(|(values, (task, model))| {
            let (mean, std) = mean_std(values);
            CompareRow {
                task,
                model,
                mean,
                std,
                n_seeds: values.len(),
            }
        })
        .collect();
    let mut text = String::from("task,model,mean,std,n_seeds\n");
    for r in &rows {
        text += &format!(
            "{},{},{:e},{:e},{}\n",
            r.task, r.model, r.mean, r.std, r.n_seeds
        );
    }
    match args.out {
        Some(path) => paths::write(&paths::resolve(path), text)?,
        None => print!("{text}"),
    }
    Ok(rows)
}
