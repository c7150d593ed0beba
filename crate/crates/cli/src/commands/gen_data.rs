use std::path::Path;

use lrc_core::tasks::{
    generate, synthetic_irregular_classification_with, ClassificationConfig, DatasetManifest,
    ManifestEntry, OdeSystem,
};

use super::parse_floats;
use crate::error::{CliError, CliResult};
use crate::paths;

pub const MANIFEST: &str = "manifest.json";
/// Name of the synthetic irregularly sampled classification set.
pub const IRREGULAR: &str = "irregular";

pub struct GenDataArgs<'a> {
    pub system: &'a str,
    pub out_dir: &'a Path,
    pub x0: Option<&'a str>,
    pub horizon: Option<f64>,
    pub samples: Option<usize>,
    pub sequences: usize,
    pub seed: u64,
}

pub fn valid_names() -> Vec<&'static str> {
    OdeSystem::ALL
        .iter()
        .map(|s| s.name())
        .chain([IRREGULAR])
        .collect()
}

pub fn run(args: &GenDataArgs) -> CliResult<()> {
    let dir = paths::resolve(args.out_dir);
    paths::create_dir(&dir)?;
    let manifest_path = dir.join(MANIFEST);
    let mut manifest = if manifest_path.exists() {
        DatasetManifest::load(&manifest_path)?
    } else {
        DatasetManifest::default()
    };
    if args.system == IRREGULAR {
        let data = synthetic_irregular_classification_with(
            args.sequences,
            args.seed,
            &ClassificationConfig::default(),
        )?;
        let file = format!("{IRREGULAR}.json");
        paths::write_json(&dir.join(&file), &data)?;
        for (split, idx) in [
            ("train", &data.train),
            ("val", &data.val),
            ("test", &data.test),
        ] {
            manifest
                .splits
                .insert(format!("{IRREGULAR}/{split}"), idx.clone());
        }
        manifest.upsert(ManifestEntry {
            name: IRREGULAR.into(),
            file,
            rows: data.sequences.len(),
            seed: Some(args.seed),
            initial_state: Vec::new(),
            horizon: None,
            parameters: Default::default(),
        });
        println!("wrote {}", dir.join(format!("{IRREGULAR}.json")).display());
    } else {
        let system: OdeSystem = args.system.parse().map_err(|_| {
            CliError::Usage(format!(
                "unknown system `{}`; valid names: {}",
                args.system,
                valid_names().join(", ")
            ))
        })?;
        let x0 = match args.x0 {
            Some(text) => parse_floats(text, "--x0")?,
            None => system.default_initial_state(),
        };
        let horizon = args.horizon.unwrap_or(system.default_horizon());
        let samples = args.samples.unwrap_or(lrc_core::tasks::DEFAULT_SAMPLES);
        let traj = generate(system, &x0, horizon, samples)?;
        let file = format!("{}.csv", system.name());
        traj.save_csv(&dir.join(&file))?;
        manifest.upsert(ManifestEntry {
            name: system.name().into(),
            file: file.clone(),
            rows: traj.len(),
            seed: None,
            initial_state: x0,
            horizon: Some(horizon),
            parameters: system
                .parameters()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        });
        println!("wrote {}", dir.join(file).display());
    }
    manifest.save(&manifest_path)?;
    Ok(())
}
