//! Bony decomposition, Littlewood–Paley partition of unity and the modified
//! paraproduct on random fields.

use gfsb_core::besov::{bony_decompose, modified_paraproduct_at, paraproduct, DyadicPartition, TimeMollifierBank};
use gfsb_core::noise::{complex_normal, replica_seed};
use gfsb_core::spectral::{pointwise_product, FourierField, Grid};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{indexed, positive_count};
use crate::outcome::{num, Outcome};
use crate::spec::Params;
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub n_modes: usize,
    pub fields: usize,
    pub tol: f64,
    pub bony_errors: Vec<f64>,
    pub partition_errors: Vec<f64>,
    /// `f ⪻ g` against `f ≺ g` for `f` constant in time.
    pub modified_errors: Vec<f64>,
    pub max_bony_error: f64,
    pub max_partition_error: f64,
    pub max_modified_error: f64,
    pub passed: bool,
}

/// Complex normal coefficients damped by `k^{-decay}`.
pub fn random_field(grid: Grid, seed: u64, decay: f64) -> FourierField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (1..=grid.n_modes()).map(|k| complex_normal(&mut rng) * (k as f64).powf(-decay)).collect();
    FourierField::from_coeffs(grid, coeffs).expect("n_modes coefficients")
}

fn errors_for(grid: Grid, p: &DyadicPartition, bank: &TimeMollifierBank, seed: u64, i: usize, decay: f64, nodes: usize, dt: f64) -> Result<[f64; 3], HarnessError> {
    let f = random_field(grid, replica_seed(seed, 2 * i as u64), decay);
    let g = random_field(grid, replica_seed(seed, 2 * i as u64 + 1), decay);
    let parts = bony_decompose(&f, &g, p)?;
    let sum = &(&parts.para + &parts.reso) + &parts.anti;
    let bony = pointwise_product(&f, &g)?.max_abs_diff(&sum);
    let mut acc = FourierField::zeros(grid);
    for b in p.blocks(&f) {
        acc.add_assign_scaled(1.0, &b);
    }
    let partition = acc.max_abs_diff(&f);
    let history = vec![f.clone(); nodes];
    let modified = modified_paraproduct_at(&history, &g, nodes - 1, dt, bank, p)?;
    let plain = paraproduct(&f, &g, p)?;
    Ok([bony, partition, modified.max_abs_diff(&plain)])
}

pub fn identity_report(params: &Params, seed: u64) -> Result<IdentityReport, HarnessError> {
    let n = positive_count(params, "n_modes")?;
    let fields = positive_count(params, "fields")?;
    let nodes = positive_count(params, "time_nodes")?;
    let decay = params.float("decay");
    let dt = params.float("dt");
    let tol = params.float("tol");
    let grid = Grid::new(n, params.float("gamma"))?;
    let p = DyadicPartition::new(grid);
    let bank = TimeMollifierBank::new(grid.gamma());
    let errs = (0..fields)
        .into_par_iter()
        .map(|i| errors_for(grid, &p, &bank, seed, i, decay, nodes, dt))
        .collect::<Result<Vec<_>, _>>()?;
    let col = |j: usize| errs.iter().map(|e| e[j]).collect::<Vec<_>>();
    let max = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max);
    let (bony_errors, partition_errors, modified_errors) = (col(0), col(1), col(2));
    let (mb, mp, mm) = (max(&bony_errors), max(&partition_errors), max(&modified_errors));
    Ok(IdentityReport {
        n_modes: n,
        fields,
        tol,
        passed: mb < tol && mp < tol && mm < tol,
        bony_errors,
        partition_errors,
        modified_errors,
        max_bony_error: mb,
        max_partition_error: mp,
        max_modified_error: mm,
    })
}

pub fn run(params: &Params, seed: u64) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new();
    out.begin("identities");
    let r = identity_report(params, seed)?;
    out.check("bony_decomposition", r.max_bony_error < r.tol, r.max_bony_error, r.tol, "max |fg - (f≺g + f∘g + f≻g)| < tol");
    out.check("partition_of_unity", r.max_partition_error < r.tol, r.max_partition_error, r.tol, "max |sum_j Δ_j f - f| < tol");
    out.check("modified_paraproduct_constant_in_time", r.max_modified_error < r.tol, r.max_modified_error, r.tol, "max |f⪻g - f≺g| < tol for f constant in time");
    let rows: Vec<Vec<String>> = (0..r.fields)
        .map(|i| vec![i.to_string(), num(r.bony_errors[i]), num(r.partition_errors[i]), num(r.modified_errors[i])])
        .collect();
    out.csv("identity_errors.csv", &["field", "bony_error", "partition_error", "modified_error"], &rows)?;
    out.series("bony_error", "field", "max_abs_error", indexed(&r.bony_errors));
    out.series("partition_error", "field", "max_abs_error", indexed(&r.partition_errors));
    out.metric("max_bony_error", r.max_bony_error);
    out.metric("max_partition_error", r.max_partition_error);
    out.metric("max_modified_error", r.max_modified_error);
    out.json("identity_report.json", &r)?;
    Ok(out)
}
