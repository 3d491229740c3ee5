//! Littlewood–Paley blocks, Bony paraproducts, the time-smoothed paraproduct
//! and norm estimators for `W^s = C^s ∩ H^s`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::quadrature::gauss_legendre_on;
use crate::spectral::{
    from_physical, physical_pair, smooth_step_down, to_physical, FourierField, Grid, SpectralError,
};
use crate::trajectory::{Trajectory, TrajectoryError};

#[derive(Debug, Error)]
pub enum BesovError {
    #[error("block {j} outside -1..={top}")]
    BlockOutOfRange { j: i32, top: i32 },
    #[error("need at least 4 blocks for a slope fit, got {0}")]
    InsufficientBlocks(usize),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

/// Smooth cutoff: 1 on `[0, 1]`, 0 on `[2, inf)`.
pub fn phi0(x: f64) -> f64 {
    smooth_step_down(x - 1.0)
}

/// Dyadic partition of unity on modes `1..=N`.
///
/// `S_j = phi0(k / 2^{j+1})`, `Delta_{-1} = S_{-1}`, `Delta_j = S_j - S_{j-1}`,
/// and the top block is the remainder `1 - S_{J-1}`, with `J` the least index
/// such that `2^{J+1} >= N`. Block `j >= 0` lives on `2^j < k < 2^{j+2}`.
#[derive(Debug, Clone)]
pub struct DyadicPartition {
    grid: Grid,
    top: i32,
    weights: Vec<Vec<f64>>,
}

impl DyadicPartition {
    pub fn new(grid: Grid) -> Self {
        let n = grid.n_modes();
        let top = (n as f64).log2().ceil() as i32 - 1;
        let s = |j: i32, k: usize| phi0(k as f64 / 2f64.powi(j + 1));
        let mut weights = Vec::with_capacity((top + 2) as usize);
        for j in -1..=top {
            let w: Vec<f64> = (1..=n)
                .map(|k| {
                    if j == -1 {
                        s(-1, k)
                    } else if j == top {
                        1.0 - s(top - 1, k)
                    } else {
                        s(j, k) - s(j - 1, k)
                    }
                })
                .collect();
            weights.push(w);
        }
        Self { grid, top, weights }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Index `J` of the top block.
    pub fn top(&self) -> i32 {
        self.top
    }

    /// Number of blocks, `J + 2`.
    pub fn block_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, j: i32, k: usize) -> f64 {
        if j < -1 || j > self.top || k == 0 || k > self.grid.n_modes() {
            return 0.0;
        }
        self.weights[(j + 1) as usize][k - 1]
    }

    pub fn weights(&self, j: i32) -> &[f64] {
        &self.weights[(j + 1) as usize]
    }

    /// `Delta_j f`.
    pub fn lp_block(&self, f: &FourierField, j: i32) -> Result<FourierField, BesovError> {
        if j < -1 || j > self.top {
            return Err(BesovError::BlockOutOfRange { j, top: self.top });
        }
        let w = self.weights(j);
        Ok(f.map_modes(|k, c| c * w[k - 1]))
    }

    /// All blocks `Delta_{-1} f, ..., Delta_J f`.
    pub fn blocks(&self, f: &FourierField) -> Vec<FourierField> {
        (-1..=self.top).map(|j| self.lp_block(f, j).unwrap()).collect()
    }

    /// `S_j f = sum_{i <= j} Delta_i f`; zero for `j < -1`, `f` for `j >= J`.
    pub fn low_pass(&self, f: &FourierField, j: i32) -> FourierField {
        if j < -1 {
            return FourierField::zeros(f.grid());
        }
        if j >= self.top {
            return f.clone();
        }
        f.map_modes(|k, c| c * phi0(k as f64 / 2f64.powi(j + 1)))
    }

    /// Multiplier of `S_j` at mode `k`.
    pub fn low_pass_weight(&self, j: i32, k: usize) -> f64 {
        if j < -1 {
            0.0
        } else if j >= self.top {
            1.0
        } else {
            phi0(k as f64 / 2f64.powi(j + 1))
        }
    }

    /// Physical samples (on `m` points) of every block of `f` and `g`.
    fn physical_blocks(&self, f: &FourierField, g: &FourierField, m: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut fb = Vec::with_capacity(self.block_count());
        let mut gb = Vec::with_capacity(self.block_count());
        for j in -1..=self.top {
            let (a, b) = physical_pair(&self.lp_block(f, j).unwrap(), &self.lp_block(g, j).unwrap(), m);
            fb.push(a);
            gb.push(b);
        }
        (fb, gb)
    }
}

#[derive(Debug, Clone)]
pub struct BonyParts {
    /// `f ≺ g`
    pub para: FourierField,
    /// `f ∘ g`
    pub reso: FourierField,
    /// `f ≻ g`
    pub anti: FourierField,
}

/// `fg = f≺g + f∘g + f≻g`, every piece computed with the dealiased product.
pub fn bony_decompose(
    f: &FourierField,
    g: &FourierField,
    p: &DyadicPartition,
) -> Result<BonyParts, BesovError> {
    f.check_grid(g)?;
    let m = 4 * f.grid().n_modes();
    let (fb, gb) = p.physical_blocks(f, g, m);
    let nb = fb.len();
    let mut para = vec![0.0; m];
    let mut reso = vec![0.0; m];
    let mut anti = vec![0.0; m];
    // running low-pass sums S_{j-1} = sum_{i <= j-2}
    let mut sf = vec![0.0; m];
    let mut sg = vec![0.0; m];
    for j in 0..nb {
        if j >= 2 {
            for x in 0..m {
                sf[x] += fb[j - 2][x];
                sg[x] += gb[j - 2][x];
            }
        }
        for x in 0..m {
            para[x] += sf[x] * gb[j][x];
            anti[x] += fb[j][x] * sg[x];
        }
        for i in j.saturating_sub(1)..(j + 2).min(nb) {
            for x in 0..m {
                reso[x] += fb[i][x] * gb[j][x];
            }
        }
    }
    let grid = f.grid();
    Ok(BonyParts {
        para: from_physical(&para, grid),
        reso: from_physical(&reso, grid),
        anti: from_physical(&anti, grid),
    })
}

/// `f ≺ g = sum_j S_{j-1} f Delta_j g`.
pub fn paraproduct(f: &FourierField, g: &FourierField, p: &DyadicPartition) -> Result<FourierField, BesovError> {
    Ok(bony_decompose(f, g, p)?.para)
}

/// `f ∘ g = sum_{|i-j| <= 1} Delta_i f Delta_j g`.
pub fn resonant(f: &FourierField, g: &FourierField, p: &DyadicPartition) -> Result<FourierField, BesovError> {
    Ok(bony_decompose(f, g, p)?.reso)
}

/// `f ≻ g = g ≺ f`.
pub fn para_ge(f: &FourierField, g: &FourierField, p: &DyadicPartition) -> Result<FourierField, BesovError> {
    Ok(bony_decompose(f, g, p)?.anti)
}

/// Causal temporal mollifiers `Q_i f(t) = int_0^1 phi(u) f((t - u 2^{-gamma i}) ∨ t_0) du`.
///
/// `phi` is a bump supported in `(0, 1)`; the integral is a Gauss–Legendre
/// rule whose weights are normalized to total mass one, so that every `Q_i`
/// fixes constants.
#[derive(Debug, Clone)]
pub struct TimeMollifierBank {
    gamma: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TimeMollifierBank {
    pub fn new(gamma: f64) -> Self {
        Self::with_points(gamma, 32)
    }

    pub fn with_points(gamma: f64, n: usize) -> Self {
        let (x, w) = gauss_legendre_on(n, 0.0, 1.0);
        let raw: Vec<f64> = x.iter().zip(&w).map(|(&u, &w)| w * Self::profile(u)).collect();
        let mass: f64 = raw.iter().sum();
        Self { gamma, nodes: x, weights: raw.iter().map(|v| v / mass).collect() }
    }

    /// Unnormalized temporal bump on `(0, 1)`.
    pub fn profile(u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            0.0
        } else {
            let y = 2.0 * u - 1.0;
            (1.0 - 1.0 / (1.0 - y * y)).exp()
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Time scale `2^{-gamma i}` of level `i`.
    pub fn scale(&self, i: i32) -> f64 {
        2f64.powf(-self.gamma * i as f64)
    }

    /// Mean of the normalized temporal kernel, in units of the level scale.
    pub fn kernel_mean(&self) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(u, w)| u * w).sum()
    }

    /// Node weights realizing `Q_i f(t_0 + n dt)` on a uniform grid with linear
    /// interpolation between nodes.
    pub fn stencil(&self, i: i32, n: usize, dt: f64) -> Vec<(usize, f64)> {
        let s = self.scale(i);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(4);
        let mut push = |idx: usize, w: f64| {
            if w == 0.0 {
                return;
            }
            match out.iter_mut().find(|e| e.0 == idx) {
                Some(e) => e.1 += w,
                None => out.push((idx, w)),
            }
        };
        for (&u, &w) in self.nodes.iter().zip(&self.weights) {
            let back = (n as f64 - u * s / dt).max(0.0);
            let lo = back.floor() as usize;
            let frac = back - lo as f64;
            if lo >= n {
                push(n, w);
            } else {
                push(lo, w * (1.0 - frac));
                push(lo + 1, w * frac);
            }
        }
        out
    }
}

/// `f ⪻ g = sum_i (Q_i S_{i-1} f) Delta_i g` at every node of a shared uniform grid.
pub fn modified_paraproduct(
    f: &Trajectory,
    g: &Trajectory,
    bank: &TimeMollifierBank,
    p: &DyadicPartition,
) -> Result<Trajectory, BesovError> {
    if !f.same_times(g) {
        return Err(TrajectoryError::TimeGridMismatch.into());
    }
    let dt = if f.len() > 1 { f.dt()? } else { 1.0 };
    let grid = f.grid();
    if grid != g.grid() {
        return Err(SpectralError::GridMismatch.into());
    }
    let fields = (0..f.len())
        .map(|n| modified_paraproduct_at(f.fields(), g.field(n), n, dt, bank, p))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory::derived("modified-paraproduct", f, fields))
}

/// Value of `f ⪻ g` at node `n`, reading `f` on nodes `0..=n`.
pub fn modified_paraproduct_at(
    f: &[FourierField],
    g_n: &FourierField,
    n: usize,
    dt: f64,
    bank: &TimeMollifierBank,
    p: &DyadicPartition,
) -> Result<FourierField, BesovError> {
    let grid = g_n.grid();
    let m = 4 * grid.n_modes();
    let mut acc = vec![0.0; m];
    let nmodes = grid.n_modes();
    for i in 1..=p.top() {
        let gi = p.lp_block(g_n, i)?;
        if gi.is_zero() {
            continue;
        }
        let mut qf = vec![Complex64::new(0.0, 0.0); nmodes];
        for (idx, w) in bank.stencil(i, n, dt) {
            for (q, c) in qf.iter_mut().zip(f[idx].coeffs()) {
                *q += c * w;
            }
        }
        for (k, q) in qf.iter_mut().enumerate() {
            *q *= p.low_pass_weight(i - 2, k + 1);
        }
        let qf = FourierField::from_coeffs(grid, qf)?;
        let (a, b) = physical_pair(&qf, &gi, m);
        for x in 0..m {
            acc[x] += a[x] * b[x];
        }
    }
    Ok(from_physical(&acc, grid))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct NormRecord {
    pub holder_s: f64,
    pub sobolev_s: f64,
    pub value_holder: f64,
    pub value_sobolev: f64,
    pub time_holder_exponent: f64,
    pub value_time: f64,
}

impl NormRecord {
    /// `||f||_{W^s} = max(C^s, H^s)`.
    pub fn w_value(&self) -> f64 {
        self.value_holder.max(self.value_sobolev)
    }

    /// Space part plus the time-Hölder seminorm.
    pub fn total(&self) -> f64 {
        self.w_value() + self.value_time
    }
}

/// `sup |Delta_j f|` for every block, on a grid oversampled 8x.
pub fn block_sup_norms(f: &FourierField, p: &DyadicPartition) -> Vec<f64> {
    let m = 16 * f.grid().n_modes();
    let blocks = p.blocks(f);
    let mut out = Vec::with_capacity(blocks.len());
    for pair in blocks.chunks(2) {
        if pair.len() == 2 {
            let (a, b) = physical_pair(&pair[0], &pair[1], m);
            out.push(a.iter().fold(0.0f64, |x, v| x.max(v.abs())));
            out.push(b.iter().fold(0.0f64, |x, v| x.max(v.abs())));
        } else {
            out.push(to_physical(&pair[0], m).iter().fold(0.0f64, |x, v| x.max(v.abs())));
        }
    }
    out
}

/// `sup_j 2^{js} ||Delta_j f||_inf`.
pub fn holder_norm(f: &FourierField, s: f64, p: &DyadicPartition) -> f64 {
    block_sup_norms(f, p)
        .iter()
        .enumerate()
        .map(|(i, v)| 2f64.powf(s * (i as f64 - 1.0)) * v)
        .fold(0.0, f64::max)
}

/// `(sum_{k != 0} |kappa_k|^{2s} |c_k|^2)^{1/2}`.
pub fn sobolev_norm(f: &FourierField, s: f64) -> f64 {
    let g = f.grid();
    let sum: f64 = f
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| g.wavenumber(i + 1).powf(2.0 * s) * c.norm_sqr())
        .sum();
    (2.0 * sum).sqrt()
}

/// `max(C^s, H^s)`.
pub fn w_norm(f: &FourierField, s: f64, p: &DyadicPartition) -> f64 {
    holder_norm(f, s, p).max(sobolev_norm(f, s))
}

pub fn estimate_norms(f: &FourierField, s: f64) -> NormRecord {
    estimate_norms_with(f, s, &DyadicPartition::new(f.grid()))
}

pub fn estimate_norms_with(f: &FourierField, s: f64, p: &DyadicPartition) -> NormRecord {
    NormRecord {
        holder_s: s,
        sobolev_s: s,
        value_holder: holder_norm(f, s, p),
        value_sobolev: sobolev_norm(f, s),
        time_holder_exponent: 0.0,
        value_time: 0.0,
    }
}

/// Largest number of nodes used by the time-Hölder seminorm.
pub const TIME_HOLDER_NODES: usize = 33;

/// `sup_t ||f(t)||_{W^alpha}` together with the `alpha/gamma` time-Hölder
/// seminorm in `W^0` (only for `alpha > 0`), taken over node pairs at least two
/// steps apart on an evenly thinned set of nodes.
pub fn estimate_space_time(f: &Trajectory, alpha: f64, gamma: f64) -> NormRecord {
    let p = DyadicPartition::new(f.grid());
    let mut rec = NormRecord { holder_s: alpha, sobolev_s: alpha, ..Default::default() };
    for u in f.fields() {
        rec.value_holder = rec.value_holder.max(holder_norm(u, alpha, &p));
        rec.value_sobolev = rec.value_sobolev.max(sobolev_norm(u, alpha));
    }
    let theta = alpha / gamma;
    rec.time_holder_exponent = theta.max(0.0);
    if theta > 0.0 && f.len() > 2 {
        rec.value_time = time_holder(f, theta, &p);
    }
    rec
}

/// `sup_{|t-s| >= 2 dt} ||f(t) - f(s)||_{W^0} / |t-s|^theta` on thinned nodes.
pub fn time_holder(f: &Trajectory, theta: f64, p: &DyadicPartition) -> f64 {
    let dt = f.dt().unwrap_or_else(|_| f.time(1) - f.time(0));
    let n = f.len();
    let stride = ((n - 1) as f64 / (TIME_HOLDER_NODES - 1) as f64).ceil().max(1.0) as usize;
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let mut best = 0.0f64;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let gap = f.time(j) - f.time(i);
            if gap < 2.0 * dt * (1.0 - 1e-9) {
                continue;
            }
            let d = f.field(j) - f.field(i);
            best = best.max(w_norm(&d, 0.0, p) / gap.powf(theta));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// Estimated Hölder exponent `-slope`.
    pub exponent: f64,
    /// A block in the range vanished; the field is smoother than the grid can show.
    pub saturated: bool,
}

/// Least-squares slope of `log2 ||Delta_j f||_inf` over `j in j_range`.
pub fn regularity_slope(
    f: &FourierField,
    j_range: (i32, i32),
    p: &DyadicPartition,
) -> Result<SlopeFit, BesovError> {
    let (j0, j1) = j_range;
    if j0 < -1 || j1 > p.top() {
        return Err(BesovError::BlockOutOfRange { j: if j0 < -1 { j0 } else { j1 }, top: p.top() });
    }
    let count = (j1 - j0 + 1).max(0) as usize;
    if count < 4 {
        return Err(BesovError::InsufficientBlocks(count));
    }
    let norms = block_sup_norms(f, p);
    let vals: Vec<f64> = (j0..=j1).map(|j| norms[(j + 1) as usize]).collect();
    let peak = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    if vals.iter().any(|&v| !(v > 1e-14 * peak)) {
        return Ok(SlopeFit { slope: f64::NEG_INFINITY, exponent: f64::INFINITY, saturated: true });
    }
    let xs: Vec<f64> = (j0..=j1).map(|j| j as f64).collect();
    let ys: Vec<f64> = vals.iter().map(|v| v.log2()).collect();
    let slope = least_squares_slope(&xs, &ys);
    Ok(SlopeFit { slope, exponent: -slope, saturated: false })
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_structure() {
        let g = Grid::new(256, 2.0).unwrap();
        let p = DyadicPartition::new(g);
        assert_eq!(p.top(), 7);
        for k in 1..=256 {
            let s: f64 = (-1..=p.top()).map(|j| p.weight(j, k)).sum();
            assert_eq!(s, 1.0, "k = {k}");
            let nonzero = (-1..=p.top()).filter(|&j| p.weight(j, k) != 0.0).count();
            assert!(nonzero <= 2);
        }
        // powers of two sit in a single block
        assert_eq!(p.weight(-1, 1), 1.0);
        assert_eq!(p.weight(0, 2), 1.0);
        assert_eq!(p.weight(3, 16), 1.0);
        assert!(p.lp_block(&FourierField::zeros(g), 2).unwrap().is_zero());
        assert!(matches!(p.lp_block(&FourierField::zeros(g), 8), Err(BesovError::BlockOutOfRange { .. })));
    }

    #[test]
    fn temporal_bank_fixes_constants() {
        let bank = TimeMollifierBank::new(1.75);
        for i in 0..6 {
            for n in [0usize, 1, 5, 200] {
                let s: f64 = bank.stencil(i, n, 1e-3).iter().map(|e| e.1).sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
        assert!((bank.kernel_mean() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn slope_of_synthetic_field() {
        // one mode per block at a power of two, amplitude 2^{-j/2}
        let g = Grid::new(1024, 2.0).unwrap();
        let p = DyadicPartition::new(g);
        let mut f = FourierField::zeros(g);
        for j in 0..=8 {
            f.set(1 << (j + 1), Complex64::new(0.5 * 2f64.powf(-0.5 * j as f64), 0.0));
        }
        let fit = regularity_slope(&f, (3, 8), &p).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-6, "{fit:?}");
        let smooth = FourierField::cosine(g, 1);
        assert!(regularity_slope(&smooth, (3, 8), &p).unwrap().saturated);
        assert!(matches!(regularity_slope(&smooth, (3, 5), &p), Err(BesovError::InsufficientBlocks(3))));
    }
}
