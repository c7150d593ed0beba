use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    /// Path relative to the manifest.
    pub file: String,
    pub rows: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub initial_state: Vec<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

/// Index of the files in a data directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    #[serde(default)]
    pub splits: BTreeMap<String, Vec<usize>>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Inserts or replaces the entry with the same name, keeping entries sorted.
    pub fn upsert(&mut self, entry: ManifestEntry) {
        self.entries.retain(|e| e.name != entry.name);
        self.entries.push(entry);
        self.entries.sort_by(|a, b| a.name.cmp(&b.name));
    }

    pub fn get(&self, name: &str) -> Option<&ManifestEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upsert_and_round_trip() {
        let entry = |name: &str, rows| ManifestEntry {
            name: name.into(),
            file: format!("{name}.csv"),
            rows,
            seed: None,
            initial_state: vec![1.0, 0.0],
            horizon: Some(10.0),
            parameters: BTreeMap::new(),
        };
        let mut m = DatasetManifest::default();
        m.upsert(entry("spiral", 10));
        m.upsert(entry("duffing", 5));
        m.upsert(entry("spiral", 1000));
        assert_eq!(m.entries.len(), 2);
        assert_eq!(m.entries[0].name, "duffing");
        assert_eq!(m.get("spiral").unwrap().rows, 1000);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        m.save(&path).unwrap();
        assert_eq!(DatasetManifest::load(&path).unwrap(), m);
    }
}
