//! Experiment files read by `lrc train`.

use std::path::{Path, PathBuf};

use lrc_core::model::ModelKind;
use lrc_core::tasks::{ClassificationConfig, OdeSystem};
use lrc_core::train::{OdeTaskConfig, SequenceTaskConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::paths;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: TaskSpec,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Ode(OdeExperiment),
    Classification(ClassificationExperiment),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeExperiment {
    pub system: OdeSystem,
    /// Trajectory CSV; generated in memory from the system defaults when absent.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Needed only when `config` is absent.
    #[serde(default)]
    pub model: Option<ModelKind>,
    /// Full task configuration; defaults for `model` when absent.
    #[serde(default)]
    pub config: Option<OdeTaskConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationExperiment {
    #[serde(default = "default_sequences")]
    pub n_sequences: usize,
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default)]
    pub generator: ClassificationConfig,
    pub config: SequenceTaskConfig,
}

fn default_sequences() -> usize {
    500
}

/// Parses JSON, reporting the path of the offending field on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &Path) -> CliResult<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        CliError::Usage(format!(
            "{}: invalid config at `{}`: {}",
            origin.display(),
            e.path(),
            e.inner()
        ))
    })
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let cfg: Self = parse_json(&paths::read_to_string(path)?, path)?;
        cfg.resolved()
    }

    /// Copy with every default filled in, validated.
    pub fn resolved(mut self) -> CliResult<Self> {
        if self.seeds.is_empty() {
            return Err(CliError::Usage("`seeds` must not be empty".into()));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != self.seeds.len() {
            return Err(CliError::Usage("`seeds` must be distinct".into()));
        }
        match &mut self.task {
            TaskSpec::Ode(ode) => {
                let cfg = match (&ode.config, ode.model) {
                    (Some(cfg), Some(kind)) if cfg.model != kind => {
                        return Err(CliError::Usage(format!(
                            "task.ode.model `{kind}` disagrees with task.ode.config.model `{}`",
                            cfg.model
                        )))
                    }
                    (Some(cfg), _) => cfg.clone(),
                    (None, Some(kind)) => OdeTaskConfig::for_kind(kind, ode.system, self.seeds[0])?,
                    (None, None) => {
                        return Err(CliError::Usage("task.ode needs `model` or `config`".into()));
                    }
                };
                cfg.training.validate()?;
                cfg.solver.validate()?;
                cfg.eval_solver.validate()?;
                ode.model = Some(cfg.model);
                ode.config = Some(cfg);
            }
            TaskSpec::Classification(c) => {
                if c.n_sequences < 2 {
                    return Err(CliError::Usage(
                        "task.classification.n_sequences must be >= 2".into(),
                    ));
                }
                c.config.training.validate()?;
                c.config.solver.validate()?;
            }
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<ExperimentConfig> {
        parse_json::<ExperimentConfig>(text, Path::new("cfg.json"))?.resolved()
    }

    #[test]
    fn ode_defaults_are_materialized() {
        let cfg =
            parse(r#"{"task": {"ode": {"system": "spiral", "model": "lrc"}}, "output_dir": "x"}"#)
                .unwrap();
        let TaskSpec::Ode(ode) = &cfg.task else {
            panic!()
        };
        let full = ode.config.as_ref().unwrap();
        assert_eq!(full.model, ModelKind::Lrc);
        assert_eq!(cfg.seeds, vec![0]);
        // the materialized form parses back to itself
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse(&text).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_name_their_path() {
        let err = parse(r#"{"task": {"ode": {"system": "spiral", "model": "lrc", "hiden": 3}}, "output_dir": "x"}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("task.ode"), "{err}");
        assert!(err.contains("hiden"), "{err}");
    }

    #[test]
    fn inconsistent_configs_are_rejected() {
        assert!(parse(r#"{"task": {"ode": {"system": "spiral"}}, "output_dir": "x"}"#).is_err());
        assert!(parse(
            r#"{"task": {"ode": {"system": "spiral", "model": "gru"}}, "output_dir": "x"}"#
        )
        .is_err());
        assert!(parse(r#"{"task": {"ode": {"system": "spiral", "model": "lrc"}}, "seeds": [], "output_dir": "x"}"#).is_err());
        assert!(parse(r#"{"task": {"ode": {"system": "spiral", "model": "lrc"}}, "seeds": [1, 1], "output_dir": "x"}"#).is_err());
    }
}
