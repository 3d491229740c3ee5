//! Exponential-integral identities and bounds against quadrature witnesses,
//! and the summability checks behind the tree covariance estimates.

use gfsb_core::trees::{
    b1_1_bound, b1_2_bound, b1_3_bound, b1_4_bounds, b1_integral, b1_quadrature, b2_bound, b3_bounds, b6_bound,
    shifted_pair_uniformity, summability_check, BoundCheck, SeriesId, Verdict,
};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::positive_count;
use crate::outcome::{num, Outcome};
use crate::spec::Params;
use crate::HarnessError;

struct Draw {
    rng: ChaCha8Rng,
    lo: f64,
    hi: f64,
}

impl Draw {
    fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Log-uniform rate in `[lo, hi]`.
    fn rate(&mut self) -> f64 {
        (self.lo.ln() + self.unit() * (self.hi.ln() - self.lo.ln())).exp()
    }

    fn between(&mut self, a: f64, b: f64) -> f64 {
        a + self.unit() * (b - a)
    }

    fn nonzero_int(&mut self, max: i64) -> i64 {
        loop {
            let k = (self.rng.next_u64() % (2 * max as u64 + 1)) as i64 - max;
            if k != 0 {
                return k;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct WitnessRow {
    bound: &'static str,
    inputs: String,
    check: BoundCheck,
}

fn identities(params: &Params, out: &mut Outcome) -> Result<(), HarnessError> {
    let triples = positive_count(params, "triples")?;
    let witnesses = positive_count(params, "witnesses")?;
    let tol = params.float("tol");
    let dmax = params.float("delta_max");
    let gamma = params.float("gamma");
    let mut d = Draw {
        rng: ChaCha8Rng::seed_from_u64(params.int("draw_seed") as u64),
        lo: params.float("rate_min"),
        hi: params.float("rate_max"),
    };

    out.begin("closed_form");
    let mut rows = Vec::with_capacity(triples);
    let mut worst: f64 = 0.0;
    let mut wit = Vec::new();
    for _ in 0..triples {
        let (a, b, delta) = (d.rate(), d.rate(), d.between(0.0, dmax));
        let closed = b1_integral(a, b, delta)?;
        let quad = b1_quadrature(a, b, delta)?;
        let rel = ((closed - quad) / quad).abs();
        worst = worst.max(rel);
        rows.push(vec![num(a), num(b), num(delta), num(closed), num(quad), num(rel)]);
        wit.push(WitnessRow { bound: "B1.1", inputs: format!("a={a} b={b} D={delta}"), check: b1_1_bound(a, b, delta)? });
    }
    out.at_most("closed_form_vs_quadrature", worst, tol);
    out.csv("closed_form.csv", &["a", "b", "delta", "closed_form", "quadrature", "relative_error"], &rows)?;
    out.metric("max_closed_form_relative_error", worst);

    out.begin("bounds");
    for _ in 0..witnesses {
        let (a, b, c, dd, e) = (d.rate(), d.rate(), d.rate(), d.rate(), d.rate());
        let delta = d.between(-dmax, dmax);
        wit.push(WitnessRow {
            bound: "B1.2",
            inputs: format!("a={a} b={b} c={c} d={dd} e={e} D={delta}"),
            check: b1_2_bound(a, b, c, dd, e, delta)?,
        });
        let (u, v) = (d.rate(), d.rate());
        let s = d.between(-dmax, dmax);
        let t = s + d.between(1e-3, dmax);
        wit.push(WitnessRow { bound: "B1.3", inputs: format!("u={u} v={v} s={s} t={t}"), check: b1_3_bound(u, v, s, t)? });
        let (a, b, t) = (d.rate(), d.rate(), d.between(1e-3, dmax));
        let (c1, c2) = b1_4_bounds(a, b, t)?;
        wit.push(WitnessRow { bound: "B1.4a", inputs: format!("a={a} b={b} t={t}"), check: c1 });
        wit.push(WitnessRow { bound: "B1.4b", inputs: format!("a={a} b={b} t={t}"), check: c2 });
        wit.push(WitnessRow { bound: "B2", inputs: format!("a={a} b={b} t={t}"), check: b2_bound(a, b, t)? });
        let (p, a, f) = (d.rate(), d.rate(), d.rate());
        let delta = d.between(-dmax, dmax);
        let (h, hhat) = b3_bounds(p, a, f, delta)?;
        wit.push(WitnessRow { bound: "B3a", inputs: format!("p={p} a={a} F={f} D={delta}"), check: h });
        wit.push(WitnessRow { bound: "B3b", inputs: format!("p={p} a={a} F={f} D={delta}"), check: hhat });
        let k = d.nonzero_int(32);
        let m = loop {
            let m = d.nonzero_int(32);
            if m != k {
                break m;
            }
        };
        let s = d.between(0.0, 1.0);
        let t = s + d.between(0.0, 0.5);
        wit.push(WitnessRow {
            bound: "B6",
            inputs: format!("k={k} m={m} t={t} s={s} gamma={gamma}"),
            check: b6_bound(k, m, t, s, gamma)?,
        });
    }
    let mut names: Vec<&str> = wit.iter().map(|w| w.bound).collect();
    names.dedup();
    names.sort();
    names.dedup();
    for name in names {
        let group: Vec<&WitnessRow> = wit.iter().filter(|w| w.bound == name).collect();
        let violations = group.iter().filter(|w| !w.check.holds()).count();
        let worst = group.iter().map(|w| w.check.ratio()).fold(0.0, f64::max);
        out.check(
            format!("{name}_never_violated"),
            violations == 0,
            violations as f64,
            0.0,
            format!("{} witnesses, worst witness/bound = {worst:.4}", group.len()),
        );
    }
    let rows: Vec<Vec<String>> = wit
        .iter()
        .map(|w| vec![w.bound.to_string(), w.inputs.clone(), num(w.check.witness), num(w.check.bound), w.check.holds().to_string()])
        .collect();
    out.csv("bound_witnesses.csv", &["bound", "inputs", "witness", "bound_value", "holds"], &rows)?;
    Ok(())
}

fn summability(params: &Params, out: &mut Outcome) -> Result<(), HarnessError> {
    let cutoff = params.int("cutoff");
    let a_max = params.int("a_max");
    if cutoff < 4 || a_max < 1 {
        return Err(HarnessError::Validation("cutoff must be >= 4 and a_max >= 1".into()));
    }
    out.begin("shifted_pair_uniformity");
    let a_values: Vec<i64> = (1..=a_max).collect();
    let u = shifted_pair_uniformity(&a_values, params.float("exponent"), cutoff);
    out.check(
        "uniform_in_a",
        u.ratio < params.float("max_ratio"),
        u.ratio,
        params.float("max_ratio"),
        format!("max/min partial sum over a in 1..={a_max} at K={cutoff}"),
    );
    let rows: Vec<Vec<String>> = u.a_values.iter().zip(&u.sums).map(|(a, s)| vec![a.to_string(), num(*s)]).collect();
    out.csv("shifted_pair_sums.csv", &["a", "partial_sum"], &rows)?;
    out.series("shifted_pair_sums", "a", "partial_sum", u.a_values.iter().zip(&u.sums).map(|(&a, &s)| (a as f64, s)).collect());
    out.metric("uniformity_ratio", u.ratio);

    out.begin("power_series_verdicts");
    let a_prime = params.float("a_prime");
    let conv = summability_check(SeriesId::FirstCondition { gamma: params.float("convergent_gamma"), a_prime }, cutoff);
    let div = summability_check(SeriesId::FirstCondition { gamma: params.float("divergent_gamma"), a_prime }, cutoff);
    out.check("convergent_flagged", conv.verdict == Verdict::Convergent, conv.decay_exponent, 0.0, format!("{:?}", conv.verdict));
    out.check("divergent_flagged", div.verdict == Verdict::Divergent, div.decay_exponent, 0.0, format!("{:?}", div.verdict));
    out.metric("convergent_report", &conv);
    out.metric("divergent_report", &div);
    Ok(())
}

pub fn run(params: &Params) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new();
    match params.text("target") {
        "identities" => identities(params, &mut out)?,
        _ => summability(params, &mut out)?,
    }
    Ok(out)
}
