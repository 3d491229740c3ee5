//! What an experiment hands back to the runner: assertions grouped into
//! tasks, artifacts and plot series.

use std::time::Instant;

use serde::Serialize;

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskOutcome {
    pub name: String,
    #[serde(skip)]
    pub seconds: f64,
    pub assertions: Vec<Assertion>,
}

impl TaskOutcome {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSeries {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub tasks: Vec<TaskOutcome>,
    pub artifacts: Vec<Artifact>,
    pub series: Vec<PlotSeries>,
    pub metrics: serde_json::Map<String, serde_json::Value>,
    started: Option<Instant>,
}

impl Outcome {
    pub fn new() -> Self {
        Self::default()
    }

    /// Opens a task; assertions go to it until the next `begin`.
    pub fn begin(&mut self, name: impl Into<String>) {
        self.close();
        self.tasks.push(TaskOutcome { name: name.into(), seconds: 0.0, assertions: Vec::new() });
        self.started = Some(Instant::now());
    }

    fn close(&mut self) {
        if let (Some(t0), Some(task)) = (self.started.take(), self.tasks.last_mut()) {
            task.seconds = t0.elapsed().as_secs_f64();
        }
    }

    pub fn finish(mut self) -> Self {
        self.close();
        self
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool, value: f64, threshold: f64, detail: impl Into<String>) {
        if self.tasks.is_empty() {
            self.begin("main");
        }
        self.tasks.last_mut().unwrap().assertions.push(Assertion {
            name: name.into(),
            passed,
            value,
            threshold,
            detail: detail.into(),
        });
    }

    /// `value <= threshold`.
    pub fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.check(name, value <= threshold, value, threshold, "value <= threshold");
    }

    /// `value >= threshold`.
    pub fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.check(name, value >= threshold, value, threshold, "value >= threshold");
    }

    pub fn metric(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.metrics.insert(key.to_string(), v);
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
        self.artifacts.push(Artifact { name: name.to_string(), bytes });
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), HarnessError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| HarnessError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.artifacts.push(Artifact { name: name.to_string(), bytes });
        Ok(())
    }

    pub fn series(&mut self, name: &str, x_label: &str, y_label: &str, points: Vec<(f64, f64)>) {
        self.series.push(PlotSeries {
            name: name.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            points: points.into_iter().filter(|(x, y)| x.is_finite() && y.is_finite()).collect(),
        });
    }

    pub fn passed(&self) -> bool {
        self.tasks.iter().all(|t| t.passed())
    }
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(e.to_string())
}

/// Shortest round-trip formatting, so equal floats always print identically.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}
