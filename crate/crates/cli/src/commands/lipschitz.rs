use std::path::Path;

use lrc_core::analysis::{
    empirical_lipschitz, lipschitz_bound_with, lipschitz_probes, LipschitzReport,
};
use lrc_core::model::{Checkpoint, Model};
use lrc_core::solvers::SolverConfig;
use serde::Serialize;

use super::parse_floats;
use crate::error::{CliError, CliResult};
use crate::paths;

pub struct LipschitzArgs<'a> {
    pub checkpoint: &'a Path,
    pub dt: Option<f64>,
    pub h_bound: Option<&'a str>,
    pub w_range: Option<&'a str>,
    pub empirical: bool,
    pub probes: usize,
    pub radius: f64,
    pub seed: u64,
    pub out: Option<&'a Path>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalSummary {
    pub value: f64,
    pub probes: usize,
    pub radius: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzOutput {
    pub certified: LipschitzReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical: Option<EmpiricalSummary>,
}

fn meta_f64s(ckpt: &Checkpoint, key: &str) -> Option<Vec<f64>> {
    match ckpt.meta.get(key)? {
        serde_json::Value::Array(a) => a.iter().map(|v| v.as_f64()).collect(),
        v => v.as_f64().map(|x| vec![x]),
    }
}

pub fn run(args: &LipschitzArgs) -> CliResult<LipschitzOutput> {
    let ckpt = Checkpoint::load(args.checkpoint)?;
    let model = Model::from_checkpoint(&ckpt)?;
    let m = model.spec.m;
    let dt = match args.dt {
        Some(dt) => dt,
        None => meta_f64s(&ckpt, "dt")
            .and_then(|v| v.first().copied())
            .ok_or_else(|| CliError::Usage("checkpoint records no dt; pass --dt".into()))?,
    };
    let mut h_bound = match args.h_bound {
        Some(text) => parse_floats(text, "--h-bound")?,
        None => meta_f64s(&ckpt, "h_bound").ok_or_else(|| {
            CliError::Usage("checkpoint records no h_bound; pass --h-bound".into())
        })?,
    };
    if h_bound.len() == 1 && m > 1 {
        h_bound = vec![h_bound[0]; m];
    }
    let w_range = match args.w_range {
        Some(text) => match parse_floats(text, "--w-range")?.as_slice() {
            [lo, hi] => Some((*lo, *hi)),
            _ => return Err(CliError::Usage("--w-range takes `lo,hi`".into())),
        },
        None => None,
    };
    let certified = lipschitz_bound_with(&model, dt, &h_bound, w_range)?;
    let empirical = if args.empirical {
        let probes = lipschitz_probes(
            &h_bound,
            model.spec.n,
            1.0,
            args.radius,
            args.probes,
            args.seed,
        )?;
        let value = empirical_lipschitz(&model, &SolverConfig::explicit_euler(1, dt), &probes)?;
        Some(EmpiricalSummary {
            value,
            probes: args.probes,
            radius: args.radius,
            seed: args.seed,
        })
    } else {
        None
    };
    let output = LipschitzOutput {
        certified,
        empirical,
    };
    match args.out {
        Some(path) => paths::write_json(&paths::resolve(path), &output)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&output).map_err(lrc_core::Error::from)?
        ),
    }
    Ok(output)
}
