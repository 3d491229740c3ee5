//! Mollified space-time white noise and the stationary stochastic convolution,
//! sampled exactly per Fourier mode as Ornstein–Uhlenbeck processes.
//!
//! Every mode draws from its own ChaCha stream keyed by `(seed, k)`, so output
//! depends only on the configuration, never on scheduling.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{FourierField, Grid, Mollifier, MollifierProfile};
use crate::trajectory::{Trajectory, TrajectoryMeta};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("mollifier with epsilon {epsilon} has active modes up to {active}, grid carries {n_modes}")]
    UnresolvedMollifier { epsilon: f64, active: usize, n_modes: usize },
    #[error("configs differ in {0}")]
    ConfigMismatch(String),
    #[error("invalid noise config: {0}")]
    Invalid(String),
}

/// Stream offset separating forcing increments from the OU paths.
const INCREMENT_STREAM: u64 = 1 << 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub gamma: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub dt: f64,
    pub t_end: f64,
    /// Global calibration constant multiplying the noise.
    pub noise_scale: f64,
    pub profile: MollifierProfile,
    /// Sampled window starts at `-burn_in` (rounded to a whole number of steps).
    pub burn_in: f64,
}

impl NoiseConfig {
    pub fn new(gamma: f64, epsilon: f64, seed: u64, dt: f64, t_end: f64) -> Self {
        Self {
            gamma,
            beta: 0.5,
            epsilon,
            seed,
            dt,
            t_end,
            noise_scale: 1.0,
            profile: MollifierProfile::Bump,
            burn_in: 0.0,
        }
    }

    pub fn mollifier(&self) -> Mollifier {
        Mollifier::with_profile(self.epsilon, self.profile)
    }

    /// Sets `noise_scale = 1 / phi(epsilon)`, so mode 1 has stationary variance
    /// exactly `1/2` (that is, `|k|^{2 beta - gamma} / 2` at `k = 1`).
    pub fn calibrated(mut self) -> Self {
        self.noise_scale = 1.0 / self.mollifier().factor(1.0);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Self {
        self.burn_in = burn_in;
        self
    }

    pub fn burn_in_steps(&self) -> usize {
        (self.burn_in / self.dt).round() as usize
    }

    pub fn end_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Checks the config against a grid; returns non-fatal warnings.
    ///
    /// The mollifier must be resolved by the grid, unless its profile equals 1
    /// on every grid mode: then the sample is the grid-truncated `epsilon -> 0`
    /// object and stays the same for every smaller `epsilon`.
    pub fn validate(&self, grid: Grid) -> Result<Vec<String>, NoiseError> {
        let bad = |m: String| Err(NoiseError::Invalid(m));
        if !(self.gamma > 1.0 && self.gamma <= 2.0) {
            return bad(format!("gamma {} outside (1, 2]", self.gamma));
        }
        if (grid.gamma() - self.gamma).abs() > 0.0 {
            return bad(format!("grid gamma {} differs from noise gamma {}", grid.gamma(), self.gamma));
        }
        if !(self.beta >= 0.0) {
            return bad(format!("beta {} < 0", self.beta));
        }
        if !(self.epsilon > 0.0) || !(self.dt > 0.0) || !(self.t_end > 0.0) || !(self.burn_in >= 0.0) {
            return bad("epsilon, dt, t_end must be positive and burn_in non-negative".into());
        }
        if !self.noise_scale.is_finite() {
            return bad("noise_scale is not finite".into());
        }
        let m = self.mollifier();
        if !m.resolved_by(grid.n_modes()) && !self.saturated(grid) {
            return Err(NoiseError::UnresolvedMollifier {
                epsilon: self.epsilon,
                active: m.max_active_mode(),
                n_modes: grid.n_modes(),
            });
        }
        let stiff = self.dt * grid.rate(grid.n_modes());
        if stiff > 10.0 {
            return bad(format!("dt * N^gamma = {stiff:.3} exceeds 10"));
        }
        let mut warnings = Vec::new();
        if stiff > 1.0 {
            warnings.push(format!("dt * N^gamma = {stiff:.3} exceeds 1"));
        }
        Ok(warnings)
    }

    /// Whether the mollifier factor is exactly 1 on every grid mode.
    pub fn saturated(&self, grid: Grid) -> bool {
        let m = self.mollifier();
        (1..=grid.n_modes()).all(|k| m.factor(grid.wavenumber(k)) == 1.0)
    }

    /// Stationary standard deviation `sigma_k` with `E|Y_k|^2 = sigma_k^2`.
    pub fn stationary_sd(&self, grid: Grid, k: usize) -> f64 {
        let kappa = grid.wavenumber(k);
        self.noise_scale
            * self.mollifier().factor(kappa)
            * kappa.powf(self.beta - 0.5 * self.gamma)
            * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn stationary_variance(&self, grid: Grid, k: usize) -> f64 {
        self.stationary_sd(grid, k).powi(2)
    }

    /// Agreement in every field other than `epsilon`.
    pub fn check_coupled(&self, other: &NoiseConfig) -> Result<(), NoiseError> {
        let probe = other.clone().with_epsilon(self.epsilon);
        if probe == *self {
            return Ok(());
        }
        let mut diffs = Vec::new();
        macro_rules! cmp {
            ($($f:ident),*) => {$( if self.$f != other.$f { diffs.push(stringify!($f)); } )*};
        }
        cmp!(gamma, beta, seed, dt, t_end, noise_scale, profile, burn_in);
        Err(NoiseError::ConfigMismatch(diffs.join(", ")))
    }
}

/// Circular complex normal with `E|z|^2 = 1`, from two 64-bit words.
pub fn complex_normal(rng: &mut impl RngCore) -> Complex64 {
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    let r = (-u1.ln()).sqrt();
    let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
    Complex64::new(r * c, r * s)
}

fn mode_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Unit-variance stationary OU path of rate `a` on `steps + 1` nodes.
pub fn unit_ou_path(seed: u64, k: usize, a: f64, dt: f64, steps: usize) -> Vec<Complex64> {
    let mut rng = mode_stream(seed, k as u64);
    let decay = (-a * dt).exp();
    let kick = (-(-2.0 * a * dt).exp_m1()).sqrt();
    let mut out = Vec::with_capacity(steps + 1);
    let mut z = complex_normal(&mut rng);
    out.push(z);
    for _ in 0..steps {
        z = z * decay + complex_normal(&mut rng) * kick;
        out.push(z);
    }
    out
}

/// Transposes per-mode paths into per-node fields.
fn assemble(grid: Grid, paths: Vec<Vec<Complex64>>, nodes: usize) -> Vec<FourierField> {
    (0..nodes)
        .map(|n| {
            let coeffs = paths
                .iter()
                .map(|p| if p.is_empty() { Complex64::new(0.0, 0.0) } else { p[n] })
                .collect();
            FourierField::from_coeffs(grid, coeffs).unwrap()
        })
        .collect()
}

/// Stationary solution `Y_eps` of `dY = -|k|^gamma Y dt + |D|^beta dW_eps` on
/// the nodes `t_n = (n - n_burn) dt`, sampled with the exact OU transition.
pub fn sample_y(config: &NoiseConfig, grid: Grid) -> Result<Trajectory, NoiseError> {
    config.validate(grid)?;
    let steps = config.burn_in_steps() + config.end_steps();
    let paths: Vec<Vec<Complex64>> = (1..=grid.n_modes())
        .into_par_iter()
        .map(|k| {
            let sd = config.stationary_sd(grid, k);
            if sd == 0.0 {
                return Vec::new();
            }
            let mut p = unit_ou_path(config.seed, k, grid.rate(k), config.dt, steps);
            p.iter_mut().for_each(|z| *z *= sd);
            p
        })
        .collect();
    let fields = assemble(grid, paths, steps + 1);
    let t0 = -(config.burn_in_steps() as f64) * config.dt;
    Ok(Trajectory::uniform(t0, config.dt, fields, TrajectoryMeta::Noise(config.clone()))
        .expect("uniform noise grid"))
}

/// Forcing increments `Delta W_k` over `[n dt, (n+1) dt]`, `n = 0..steps`, with
/// `E|Delta W_k|^2 = noise_scale^2 phi(eps k)^2 |k|^{2 beta} dt`.
pub fn sample_noise_increments(
    config: &NoiseConfig,
    grid: Grid,
    steps: usize,
) -> Result<Trajectory, NoiseError> {
    if steps == 0 {
        return Err(NoiseError::Invalid("steps must be at least 1".into()));
    }
    config.validate(grid)?;
    let m = config.mollifier();
    let paths: Vec<Vec<Complex64>> = (1..=grid.n_modes())
        .into_par_iter()
        .map(|k| {
            let kappa = grid.wavenumber(k);
            let sd = config.noise_scale * m.factor(kappa) * kappa.powf(config.beta) * config.dt.sqrt();
            if sd == 0.0 {
                return Vec::new();
            }
            let mut rng = mode_stream(config.seed, INCREMENT_STREAM + k as u64);
            (0..steps).map(|_| complex_normal(&mut rng) * sd).collect()
        })
        .collect();
    let fields = assemble(grid, paths, steps);
    Ok(Trajectory::uniform(0.0, config.dt, fields, TrajectoryMeta::Noise(config.clone()))
        .expect("uniform noise grid"))
}

/// Two `Y` trajectories driven by one white-noise draw, mollified at the two
/// configs' `epsilon`.
pub fn couple_noise(
    a: &NoiseConfig,
    b: &NoiseConfig,
    grid: Grid,
) -> Result<(Trajectory, Trajectory), NoiseError> {
    a.check_coupled(b)?;
    Ok((sample_y(a, grid)?, sample_y(b, grid)?))
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of Monte-Carlo replica `i` derived from a base seed.
pub fn replica_seed(base: u64, i: u64) -> u64 {
    splitmix64(splitmix64(base) ^ i.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_and_variance_formula() {
        let g = Grid::new(64, 2.0).unwrap();
        let c = NoiseConfig::new(2.0, 1.0 / 64.0, 1, 1e-4, 0.01).calibrated();
        assert!((c.stationary_variance(g, 1) - 0.5).abs() < 1e-15);
        // eps -> 0, noise_scale 1: sigma^2 = 2^{1-2}/2 at k = 2
        let c = NoiseConfig::new(2.0, 1e-9, 1, 1e-4, 0.01);
        assert!((c.stationary_variance(g, 2) - 0.25).abs() < 1e-8);
    }

    #[test]
    fn validation() {
        let g = Grid::new(16, 2.0).unwrap();
        let c = NoiseConfig::new(2.0, 1.0 / 64.0, 1, 1e-3, 0.1);
        assert!(matches!(c.validate(g), Err(NoiseError::UnresolvedMollifier { .. })));
        let flat = NoiseConfig { profile: MollifierProfile::FlatTop, ..c.clone() };
        assert!(flat.validate(g).is_ok());
        let ok = c.clone().with_epsilon(1.0 / 16.0);
        assert!(ok.validate(g).unwrap().is_empty());
        let stiff = NoiseConfig { dt: 0.01, ..ok.clone() };
        assert_eq!(stiff.validate(g).unwrap().len(), 1);
        let too_stiff = NoiseConfig { dt: 0.1, ..ok.clone() };
        assert!(too_stiff.validate(g).is_err());
        assert!(ok.check_coupled(&ok.clone().with_epsilon(0.5)).is_ok());
        assert_eq!(
            ok.check_coupled(&ok.clone().with_seed(9)),
            Err(NoiseError::ConfigMismatch("seed".into()))
        );
    }

    #[test]
    fn deterministic_and_coupled() {
        let g = Grid::new(16, 1.6).unwrap();
        let a = NoiseConfig::new(1.6, 1.0 / 8.0, 7, 1e-3, 0.01).with_burn_in(0.005);
        let y1 = sample_y(&a, g).unwrap();
        let y2 = sample_y(&a, g).unwrap();
        assert_eq!(y1, y2);
        assert_eq!(y1.len(), 16);
        assert_eq!(y1.time(5), 0.0);
        let b = a.clone().with_epsilon(1.0 / 16.0);
        let (ya, yb) = couple_noise(&a, &b, g).unwrap();
        // same underlying draw: ratios equal the mollifier ratio
        let k = 3;
        let r = ya.field(4).get(k) / yb.field(4).get(k);
        let want = a.mollifier().factor(3.0) / b.mollifier().factor(3.0);
        assert!((r.re - want).abs() < 1e-12 && r.im.abs() < 1e-12);
        // modes beyond the support of a are zero
        assert_eq!(ya.field(0).get(9), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn replica_seeds_distinct() {
        let s: std::collections::HashSet<u64> = (0..1000).map(|i| replica_seed(42, i)).collect();
        assert_eq!(s.len(), 1000);
    }
}
