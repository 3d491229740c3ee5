//! Time-indexed sequences of Fourier fields.

use thiserror::Error;

use crate::noise::NoiseConfig;
use crate::spectral::{FourierField, Grid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("times must be strictly increasing")]
    NonIncreasing,
    #[error("time grid is not uniform")]
    NonuniformGrid,
    #[error("{times} times but {fields} fields")]
    LengthMismatch { times: usize, fields: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("time grids differ")]
    TimeGridMismatch,
    #[error("empty trajectory")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrajectoryMeta {
    Noise(NoiseConfig),
    Derived(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    fields: Vec<FourierField>,
    meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        fields: Vec<FourierField>,
        meta: TrajectoryMeta,
    ) -> Result<Self, TrajectoryError> {
        if times.is_empty() {
            return Err(TrajectoryError::Empty);
        }
        if times.len() != fields.len() {
            return Err(TrajectoryError::LengthMismatch { times: times.len(), fields: fields.len() });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(TrajectoryError::NonIncreasing);
        }
        let g = fields[0].grid();
        if fields.iter().any(|f| f.grid() != g) {
            return Err(TrajectoryError::GridMismatch);
        }
        Ok(Self { times, fields, meta })
    }

    /// Times `t0 + n dt` for `n = 0..fields.len()`.
    pub fn uniform(
        t0: f64,
        dt: f64,
        fields: Vec<FourierField>,
        meta: TrajectoryMeta,
    ) -> Result<Self, TrajectoryError> {
        let times = uniform_times(t0, dt, fields.len());
        Self::new(times, fields, meta)
    }

    pub fn derived(tag: &str, template: &Trajectory, fields: Vec<FourierField>) -> Self {
        assert_eq!(fields.len(), template.len());
        Self { times: template.times.clone(), fields, meta: TrajectoryMeta::Derived(tag.to_string()) }
    }

    pub fn zeros_like(template: &Trajectory) -> Self {
        let z = FourierField::zeros(template.grid());
        Self::derived("zero", template, vec![z; template.len()])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[FourierField] {
        &self.fields
    }

    pub fn into_fields(self) -> Vec<FourierField> {
        self.fields
    }

    pub fn field(&self, i: usize) -> &FourierField {
        &self.fields[i]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn meta(&self) -> &TrajectoryMeta {
        &self.meta
    }

    pub fn grid(&self) -> Grid {
        self.fields[0].grid()
    }

    pub fn last(&self) -> &FourierField {
        self.fields.last().unwrap()
    }

    /// Step of a uniform grid; error if the spacing varies by more than 1e-9 relative.
    pub fn dt(&self) -> Result<f64, TrajectoryError> {
        if self.len() < 2 {
            return Err(TrajectoryError::NonuniformGrid);
        }
        let n = self.len() - 1;
        let dt = (self.times[n] - self.times[0]) / n as f64;
        for (i, &t) in self.times.iter().enumerate() {
            if (t - (self.times[0] + i as f64 * dt)).abs() > 1e-9 * dt.max(1.0) {
                return Err(TrajectoryError::NonuniformGrid);
            }
        }
        Ok(dt)
    }

    pub fn same_times(&self, other: &Trajectory) -> bool {
        self.len() == other.len()
            && self.times.iter().zip(&other.times).all(|(a, b)| (a - b).abs() <= 1e-12 * a.abs().max(1.0))
    }

    /// Index of the first node with `t_i >= t` (up to rounding).
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * self.dt().unwrap_or(1.0);
        self.times.iter().position(|&s| s >= t - tol)
    }

    /// Nodes with `t_i >= t`.
    pub fn slice_from(&self, t: f64) -> Trajectory {
        let i = self.index_at(t).unwrap_or(self.len() - 1);
        Self {
            times: self.times[i..].to_vec(),
            fields: self.fields[i..].to_vec(),
            meta: self.meta.clone(),
        }
    }

    /// Restricts to every `stride`-th node.
    pub fn subsample(&self, stride: usize) -> Trajectory {
        let idx: Vec<usize> = (0..self.len()).step_by(stride.max(1)).collect();
        Self {
            times: idx.iter().map(|&i| self.times[i]).collect(),
            fields: idx.iter().map(|&i| self.fields[i].clone()).collect(),
            meta: self.meta.clone(),
        }
    }

    pub fn map(&self, tag: &str, f: impl Fn(&FourierField) -> FourierField) -> Trajectory {
        Self::derived(tag, self, self.fields.iter().map(f).collect())
    }

    /// `self + a * other` node by node.
    pub fn axpy(&self, a: f64, other: &Trajectory) -> Result<Trajectory, TrajectoryError> {
        if !self.same_times(other) {
            return Err(TrajectoryError::TimeGridMismatch);
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(x, y)| x.axpy(a, y).map_err(|_| TrajectoryError::GridMismatch))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::derived("sum", self, fields))
    }

    pub fn scale(&self, a: f64) -> Trajectory {
        self.map("scaled", |f| f.scale(a))
    }

    /// `sup_t n(f(t))`.
    pub fn sup_norm_by(&self, n: impl Fn(&FourierField) -> f64) -> f64 {
        self.fields.iter().map(n).fold(0.0, f64::max)
    }

    pub fn with_meta(mut self, meta: TrajectoryMeta) -> Self {
        self.meta = meta;
        self
    }
}

pub fn uniform_times(t0: f64, dt: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t0 + i as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_and_slicing() {
        let g = Grid::new(4, 2.0).unwrap();
        let z = FourierField::zeros(g);
        assert_eq!(
            Trajectory::new(vec![0.0, 0.0], vec![z.clone(), z.clone()], TrajectoryMeta::Derived("x".into())),
            Err(TrajectoryError::NonIncreasing)
        );
        let t = Trajectory::uniform(-1.0, 0.25, vec![z.clone(); 9], TrajectoryMeta::Derived("x".into()))
            .unwrap();
        assert!((t.dt().unwrap() - 0.25).abs() < 1e-15);
        let s = t.slice_from(0.0);
        assert_eq!(s.len(), 5);
        assert_eq!(s.time(0), 0.0);
        assert_eq!(t.subsample(4).len(), 3);
    }
}
