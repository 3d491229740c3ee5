//! Block-norm decay of `Y`, `X^lr` and `X^rLlr` at the final time, averaged
//! over independent samples.

use gfsb_core::besov::{block_sup_norms, least_squares_slope, DyadicPartition};
use gfsb_core::noise::{replica_seed, sample_y, NoiseConfig};
use gfsb_core::spectral::Grid;
use gfsb_core::trees::build_x_trees;
use rayon::prelude::*;

use super::positive_count;
use crate::outcome::{num, Outcome};
use crate::spec::Params;
use crate::HarnessError;

const SYMBOLS: [(&str, &str); 3] = [("Y", "y"), ("lr", "lr"), ("rLlr", "rllr")];

pub fn run(params: &Params, seed: u64) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new();
    let samples = positive_count(params, "samples")?;
    let gamma = params.float("gamma");
    let grid = Grid::new(params.count("n_modes")?, gamma)?;
    let config = NoiseConfig::new(gamma, params.float("epsilon"), seed, params.float("dt"), params.float("t_end"));
    config.validate(grid)?;
    let p = DyadicPartition::new(grid);
    let (j0, j1) = (params.int("j_min") as i32, params.int("j_max") as i32);
    if j0 < 0 || j1 > p.top() || j1 - j0 < 3 {
        return Err(HarnessError::Validation(format!("need 0 <= j_min, j_max <= {} and at least four blocks", p.top())));
    }

    // per sample: block norms of Y, X^lr, X^rLlr at t_end
    let norms: Vec<[Vec<f64>; 3]> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let y = sample_y(&config.clone().with_seed(replica_seed(seed, i as u64)), grid)?.slice_from(0.0);
            let (xlr, xrllr) = build_x_trees(&y, gamma)?;
            Ok([
                block_sup_norms(y.last(), &p),
                block_sup_norms(xlr.trajectory.last(), &p),
                block_sup_norms(xrllr.trajectory.last(), &p),
            ])
        })
        .collect::<Result<_, HarnessError>>()?;

    out.begin("block_norm_exponents");
    let js: Vec<f64> = (j0..=j1).map(f64::from).collect();
    let mut exponents = [0.0; 3];
    let mut rows = Vec::new();
    for (c, (name, key)) in SYMBOLS.iter().enumerate() {
        let mean: Vec<f64> = (j0..=j1)
            .map(|j| norms.iter().map(|n| n[c][(j + 1) as usize]).sum::<f64>() / samples as f64)
            .collect();
        let logs: Vec<f64> = mean.iter().map(|m| m.log2()).collect();
        exponents[c] = -least_squares_slope(&js, &logs);
        let floor = params.float(&format!("min_exponent_{key}"));
        out.check(format!("exponent_{name}"), exponents[c] >= floor, exponents[c], floor, format!("fit over j in [{j0}, {j1}]"));
        for (j, m) in (j0..=j1).zip(&mean) {
            rows.push(vec![name.to_string(), j.to_string(), num(*m)]);
        }
        out.series(&format!("block_norms_{name}"), "j", "log2_mean_block_sup_norm", js.iter().cloned().zip(logs).collect());
        out.metric(&format!("exponent_{name}"), exponents[c]);
    }
    out.check(
        "strict_ordering",
        exponents[0] < exponents[1] && exponents[1] < exponents[2],
        exponents[1] - exponents[0],
        0.0,
        format!("Y {:.4} < X^lr {:.4} < X^rLlr {:.4}", exponents[0], exponents[1], exponents[2]),
    );
    out.csv("block_norms.csv", &["symbol", "j", "mean_block_sup_norm"], &rows)?;
    Ok(out)
}
