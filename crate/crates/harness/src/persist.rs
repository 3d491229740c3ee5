//! Trajectories on disk: one binary snapshot per node plus a JSON manifest
//! listing the times, the snapshot files and the generating configuration.

use std::path::{Path, PathBuf};

use gfsb_core::noise::NoiseConfig;
use gfsb_core::spectral::{read_snapshot, write_snapshot};
use gfsb_core::trajectory::{Trajectory, TrajectoryMeta};
use serde::{Deserialize, Serialize};

use crate::manifest::write_atomic;
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryManifest {
    pub symbol: String,
    pub n_modes: usize,
    pub gamma: f64,
    pub beta: f64,
    pub times: Vec<f64>,
    /// Snapshot file names, relative to the manifest's directory.
    pub files: Vec<String>,
    pub seed: Option<u64>,
    pub config: Option<NoiseConfig>,
    #[serde(default)]
    pub extra: serde_json::Value,
}

/// Writes `<dir>/<stem>_NNNNN.gfsb` for every node and `<dir>/<stem>.json`.
pub fn write_trajectory(
    dir: &Path,
    stem: &str,
    symbol: &str,
    tr: &Trajectory,
    beta: f64,
    extra: serde_json::Value,
) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::Io(format!("{}: {e}", dir.display())))?;
    let width = tr.len().saturating_sub(1).to_string().len().max(5);
    let mut files = Vec::with_capacity(tr.len());
    for (i, f) in tr.fields().iter().enumerate() {
        let name = format!("{stem}_{i:0width$}.gfsb");
        write_snapshot(&dir.join(&name), f, beta)?;
        files.push(name);
    }
    let config = match tr.meta() {
        TrajectoryMeta::Noise(c) => Some(c.clone()),
        TrajectoryMeta::Derived(_) => None,
    };
    let m = TrajectoryManifest {
        symbol: symbol.to_string(),
        n_modes: tr.grid().n_modes(),
        gamma: tr.grid().gamma(),
        beta,
        times: tr.times().to_vec(),
        files,
        seed: config.as_ref().map(|c| c.seed),
        config,
        extra,
    };
    let path = dir.join(format!("{stem}.json"));
    let mut bytes = serde_json::to_vec_pretty(&m).map_err(|e| HarnessError::Io(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)?;
    Ok(path)
}

pub fn read_trajectory(manifest: &Path) -> Result<(TrajectoryManifest, Trajectory), HarnessError> {
    let text = std::fs::read_to_string(manifest).map_err(|e| HarnessError::Io(format!("{}: {e}", manifest.display())))?;
    let m: TrajectoryManifest =
        serde_json::from_str(&text).map_err(|e| HarnessError::Io(format!("{}: {e}", manifest.display())))?;
    if m.files.len() != m.times.len() {
        return Err(HarnessError::Io(format!("{}: {} files for {} times", manifest.display(), m.files.len(), m.times.len())));
    }
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let fields = m
        .files
        .iter()
        .map(|f| read_snapshot(&dir.join(f)).map(|s| s.field))
        .collect::<Result<Vec<_>, _>>()?;
    let meta = match &m.config {
        Some(c) => TrajectoryMeta::Noise(c.clone()),
        None => TrajectoryMeta::Derived(m.symbol.clone()),
    };
    let tr = Trajectory::new(m.times.clone(), fields, meta).map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok((m, tr))
}
