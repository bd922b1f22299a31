use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CurveSummary, EpisodeRecord, ExperimentConfig, HarnessError};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    /// Layout name to layout version for every map the run used.
    pub layout_versions: BTreeMap<String, String>,
    pub code_version: String,
}

pub fn manifest(cfg: &ExperimentConfig) -> Manifest {
    let env = cfg.domain.build();
    let mut layout_versions = BTreeMap::new();
    match env.layout() {
        Some(l) => layout_versions.insert(l.name.clone(), l.version.clone()),
        None => layout_versions.insert(env.name().to_string(), "builtin".to_string()),
    };
    Manifest {
        config: cfg.clone(),
        seeds: cfg.seeds.clone(),
        layout_versions,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Write the per-episode curve (with every run's return) and the manifest
/// into `dir`, replacing earlier output.
pub fn export(
    cfg: &ExperimentConfig,
    runs: &[Vec<EpisodeRecord>],
    summary: &CurveSummary,
    dir: &Path,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(RESULTS_FILE))?;
    let mut header = vec![
        "episode".to_string(),
        "mean".to_string(),
        "variance".to_string(),
        "no_plan_runs".to_string(),
    ];
    header.extend((0..runs.len()).map(|i| format!("run_{i}")));
    w.write_record(&header)?;
    for e in 0..summary.mean.len() {
        let mut row = vec![
            e.to_string(),
            summary.mean[e].to_string(),
            summary.variance[e].to_string(),
            summary.no_plan_runs[e].to_string(),
        ];
        row.extend(runs.iter().map(|r| r[e].ret.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(&manifest(cfg))?;
    fs::write(dir.join(MANIFEST_FILE), json + "\n")?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, HarnessError> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(serde_json::from_str(&text)?)
}
