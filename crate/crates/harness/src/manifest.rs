//! Running a spec: thread pool, artifact persistence and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::experiments;
use crate::outcome::{Assertion, Outcome, PlotSeries};
use crate::spec::ExperimentSpec;
use crate::HarnessError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SERIES_FILE: &str = "series.json";
pub const PLOT_DIR: &str = "plot";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Passed,
    Failed,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionRecord {
    pub name: String,
    pub passed: bool,
    #[serde(deserialize_with = "nan_as_null")]
    pub value: f64,
    #[serde(deserialize_with = "nan_as_null")]
    pub threshold: f64,
    pub detail: String,
}

impl From<&Assertion> for AssertionRecord {
    fn from(a: &Assertion) -> Self {
        Self { name: a.name.clone(), passed: a.passed, value: a.value, threshold: a.threshold, detail: a.detail.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub name: String,
    pub status: TaskStatus,
    pub wall_seconds: f64,
    pub assertions: Vec<AssertionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub kind: String,
    pub spec_hash: String,
    pub code_version: String,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub output_dir: PathBuf,
    pub status: TaskStatus,
    pub tasks: Vec<TaskRecord>,
    pub artifacts: Vec<ArtifactRecord>,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.status == TaskStatus::Passed
    }

    pub fn failed_assertions(&self) -> Vec<(&str, &AssertionRecord)> {
        self.tasks
            .iter()
            .flat_map(|t| t.assertions.iter().filter(|a| !a.passed).map(move |a| (t.name.as_str(), a)))
            .collect()
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        serde_json::from_str(&text).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))
    }

    fn artifact_path(&self, name: &str) -> Option<PathBuf> {
        self.artifacts.iter().find(|a| a.path == name).map(|a| self.output_dir.join(&a.path))
    }
}

/// JSON writes non-finite floats as `null`; read them back as NaN.
fn nan_as_null<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

pub fn code_version() -> String {
    format!("gfsb-harness {}", env!("CARGO_PKG_VERSION"))
}

fn io_err(path: &Path, e: std::io::Error) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let file = path.file_name().ok_or_else(|| HarnessError::Io(format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", file.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Thread count from `GFSB_THREADS`, if set to a positive integer.
pub fn env_threads() -> Option<usize> {
    std::env::var("GFSB_THREADS").ok().and_then(|s| s.trim().parse().ok()).filter(|&n| n > 0)
}

/// Runs `spec` with parallelism capped by `GFSB_THREADS`.
pub fn run(spec: &ExperimentSpec) -> Result<RunManifest, HarnessError> {
    run_with_threads(spec, env_threads())
}

/// Validates, executes and persists. Failed assertions still return `Ok`; the
/// manifest status says `failed`. An experiment error returns `TaskFailure`
/// carrying the partial manifest, which is also written to disk.
pub fn run_with_threads(spec: &ExperimentSpec, threads: Option<usize>) -> Result<RunManifest, HarnessError> {
    let params = spec.validate()?;
    let spec_hash = spec.hash()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| HarnessError::Io(e.to_string()))?;
    let start = Instant::now();
    let result = pool.install(|| experiments::execute(spec, &params));
    let wall = start.elapsed().as_secs_f64();
    let mut manifest = RunManifest {
        name: spec.name.clone(),
        kind: spec.kind.to_string(),
        spec_hash: spec_hash.clone(),
        code_version: code_version(),
        seeds: spec.seeds.clone(),
        threads: pool.current_num_threads(),
        output_dir: spec.output_dir.clone(),
        status: TaskStatus::Error,
        tasks: Vec::new(),
        artifacts: Vec::new(),
        wall_seconds: wall,
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            let message = e.to_string();
            manifest.tasks.push(TaskRecord {
                name: spec.kind.to_string(),
                status: TaskStatus::Error,
                wall_seconds: wall,
                assertions: Vec::new(),
                error: Some(message.clone()),
            });
            write_manifest(&manifest)?;
            return Err(HarnessError::TaskFailure { task: spec.kind.to_string(), message, manifest: Box::new(manifest) });
        }
    };
    for t in &outcome.tasks {
        manifest.tasks.push(TaskRecord {
            name: t.name.clone(),
            status: if t.passed() { TaskStatus::Passed } else { TaskStatus::Failed },
            wall_seconds: t.seconds,
            assertions: t.assertions.iter().map(AssertionRecord::from).collect(),
            error: None,
        });
    }
    let budget = params.float("max_seconds");
    manifest.tasks.push(TaskRecord {
        name: "runtime".into(),
        status: if wall < budget { TaskStatus::Passed } else { TaskStatus::Failed },
        wall_seconds: wall,
        assertions: vec![AssertionRecord {
            name: "wall_seconds".into(),
            passed: wall < budget,
            value: wall,
            threshold: budget,
            detail: "value < threshold".into(),
        }],
        error: None,
    });
    manifest.status = if manifest.tasks.iter().all(|t| t.status == TaskStatus::Passed) {
        TaskStatus::Passed
    } else {
        TaskStatus::Failed
    };
    persist(&mut manifest, &outcome, &spec_hash)?;
    Ok(manifest)
}

#[derive(Serialize)]
struct Summary<'a> {
    name: &'a str,
    kind: &'a str,
    spec_hash: &'a str,
    passed: bool,
    tasks: &'a [crate::outcome::TaskOutcome],
    metrics: &'a serde_json::Map<String, serde_json::Value>,
}

fn persist(manifest: &mut RunManifest, outcome: &Outcome, spec_hash: &str) -> Result<(), HarnessError> {
    let dir = manifest.output_dir.clone();
    let summary = Summary {
        name: &manifest.name,
        kind: &manifest.kind,
        spec_hash,
        passed: outcome.passed(),
        tasks: &outcome.tasks,
        metrics: &outcome.metrics,
    };
    let mut files: Vec<(String, Vec<u8>)> = outcome.artifacts.iter().map(|a| (a.name.clone(), a.bytes.clone())).collect();
    let mut s = serde_json::to_vec_pretty(&summary).map_err(|e| HarnessError::Io(e.to_string()))?;
    s.push(b'\n');
    files.push((SUMMARY_FILE.to_string(), s));
    let mut series = serde_json::to_vec_pretty(&outcome.series).map_err(|e| HarnessError::Io(e.to_string()))?;
    series.push(b'\n');
    files.push((SERIES_FILE.to_string(), series));
    for (name, bytes) in files {
        write_atomic(&dir.join(&name), &bytes)?;
        manifest.artifacts.push(ArtifactRecord { sha256: sha256_hex(&bytes), bytes: bytes.len(), path: name });
    }
    write_manifest(manifest)
}

fn write_manifest(m: &RunManifest) -> Result<(), HarnessError> {
    let mut bytes = serde_json::to_vec_pretty(m).map_err(|e| HarnessError::Io(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(&m.output_dir.join(MANIFEST_FILE), &bytes)
}

/// Writes one two-column CSV per plot series under `<output_dir>/plot/`.
///
/// Each file is named `<series>.csv`; the header row holds the axis labels and
/// every following row one `(x, y)` point.
pub fn emit_plot_data(manifest: &RunManifest) -> Result<Vec<PathBuf>, HarnessError> {
    if manifest.tasks.is_empty() {
        return Err(HarnessError::IncompleteManifest("manifest has no tasks".into()));
    }
    if let Some(t) = manifest.tasks.iter().find(|t| t.status == TaskStatus::Error) {
        return Err(HarnessError::IncompleteManifest(format!("task `{}` did not complete", t.name)));
    }
    let path = manifest
        .artifact_path(SERIES_FILE)
        .ok_or_else(|| HarnessError::IncompleteManifest(format!("no {SERIES_FILE} artifact")))?;
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let series: Vec<PlotSeries> = serde_json::from_str::<Vec<SeriesIn>>(&text)
        .map_err(|e| HarnessError::IncompleteManifest(format!("{}: {e}", path.display())))?
        .into_iter()
        .map(SeriesIn::into_series)
        .collect();
    let mut out = Vec::with_capacity(series.len());
    for s in &series {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| HarnessError::Io(e.to_string());
        w.write_record([&s.x_label, &s.y_label]).map_err(io)?;
        for (x, y) in &s.points {
            w.write_record([crate::outcome::num(*x), crate::outcome::num(*y)]).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
        let p = manifest.output_dir.join(PLOT_DIR).join(format!("{}.csv", s.name));
        write_atomic(&p, &bytes)?;
        out.push(p);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct SeriesIn {
    name: String,
    x_label: String,
    y_label: String,
    points: Vec<(f64, f64)>,
}

impl SeriesIn {
    fn into_series(self) -> PlotSeries {
        PlotSeries { name: self.name, x_label: self.x_label, y_label: self.y_label, points: self.points }
    }
}
