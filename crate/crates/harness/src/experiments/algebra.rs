//! Exhaustive lower-bound audit of the regularity map and the regular pair set.

use std::collections::BTreeSet;

use gfsb_core::algebra::{
    generate_regular_subset, regular_set, regularity, verify_lemma_r_bound, LemmaReport, RegularSetEntry,
    RegularityParams, TreeSymbol,
};
use serde::Serialize;

use crate::outcome::{num, Outcome};
use crate::spec::Params;
use crate::HarnessError;

#[derive(Debug, Clone, Serialize)]
pub struct SymbolRegularity {
    pub name: String,
    pub key: String,
    pub leaves: usize,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeAlgebraReport {
    pub params: RegularityParams,
    pub max_leaves: usize,
    pub symbols: Vec<SymbolRegularity>,
    pub selected: Vec<String>,
    pub regular_set: Vec<RegularSetEntry>,
}

/// Generated symbols with their regularities and the regular set of `selected`.
pub fn tree_algebra_report(
    params: RegularityParams,
    max_leaves: usize,
    selected: &[TreeSymbol],
) -> Result<TreeAlgebraReport, HarnessError> {
    let symbols = generate_regular_subset(max_leaves)
        .into_iter()
        .map(|s| {
            Ok(SymbolRegularity { name: s.name(), key: s.canonical_key(), leaves: s.leaves(), r: regularity(&s, &params)? })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(TreeAlgebraReport {
        params,
        max_leaves,
        symbols,
        selected: selected.iter().map(|s| s.name()).collect(),
        regular_set: regular_set(selected, &params)?,
    })
}

/// Parses `alpha:b` entries.
fn parse_pairs(items: &[&str]) -> Result<Vec<(String, String)>, HarnessError> {
    items
        .iter()
        .map(|s| {
            s.split_once(':')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| HarnessError::Validation(format!("expected `left:right`, got `{s}`")))
        })
        .collect()
}

pub fn run(params: &Params) -> Result<Outcome, HarnessError> {
    let mut out = Outcome::new();
    let max_leaves = params.count("max_leaves")?;
    let mut lemma_rows = Vec::new();
    let mut reports: Vec<LemmaReport> = Vec::new();
    for (a, b) in parse_pairs(&params.items("params"))? {
        let parse = |x: &str| x.parse::<f64>().map_err(|_| HarnessError::Validation(format!("`{x}` is not a number")));
        let rp = RegularityParams::new(parse(&a)?, parse(&b)?)?;
        out.begin(format!("lower_bound alpha={a} b={b}"));
        let rep = verify_lemma_r_bound(max_leaves, &rp)?;
        out.check("r_bound_holds", rep.holds, rep.min_r_products, rep.bound, "min over products of r >= 2 alpha + b");
        let r_lr = regularity(&TreeSymbol::lr(), &rp)?;
        let gap = (r_lr - rep.min_r_products).abs();
        out.check("minimum_at_generator_square", gap <= 1e-12, r_lr, rep.min_r_products, "r(n·n) equals the minimum over products");
        lemma_rows.push(vec![
            a.clone(),
            b.clone(),
            rep.symbol_count.to_string(),
            num(rep.bound),
            num(rep.min_r_products),
            rep.argmin_products.clone(),
            rep.holds.to_string(),
        ]);
        reports.push(rep);
    }
    out.csv("lower_bound.csv", &["alpha", "b", "symbols", "bound", "min_r_products", "argmin", "holds"], &lemma_rows)?;

    out.begin("regular_set");
    let rp = RegularityParams::new(params.float("regular_alpha"), params.float("regular_b"))?;
    let selected = params.items("symbols").iter().map(|s| TreeSymbol::parse(s)).collect::<Result<Vec<_>, _>>()?;
    let report = tree_algebra_report(rp, max_leaves, &selected)?;
    let generated: BTreeSet<(String, String)> =
        report.regular_set.iter().map(|e| (e.left.clone(), e.right.clone())).collect();
    let expected: BTreeSet<(String, String)> = parse_pairs(&params.items("expected_pairs"))?
        .into_iter()
        .map(|(l, r)| Ok((TreeSymbol::parse(&l)?.name(), TreeSymbol::parse(&r)?.name())))
        .collect::<Result<_, HarnessError>>()?;
    let extra: Vec<String> = generated.difference(&expected).map(|(l, r)| format!("({l},{r})")).collect();
    let missing: Vec<String> = expected.difference(&generated).map(|(l, r)| format!("({l},{r})")).collect();
    out.check(
        "regular_set_matches_expected",
        extra.is_empty() && missing.is_empty(),
        generated.len() as f64,
        expected.len() as f64,
        format!("generated minus expected: [{}]; expected minus generated: [{}]", extra.join(" "), missing.join(" ")),
    );
    let rows: Vec<Vec<String>> = report
        .regular_set
        .iter()
        .map(|e| vec![e.left.clone(), e.right.clone(), num(e.sum_r), expected.contains(&(e.left.clone(), e.right.clone())).to_string()])
        .collect();
    out.csv("regular_set.csv", &["left", "right", "sum_r", "expected"], &rows)?;
    out.series(
        "regularity_by_leaves",
        "leaves",
        "min_r",
        (1..=max_leaves)
            .map(|n| {
                let m = report.symbols.iter().filter(|s| s.leaves == n).map(|s| s.r).fold(f64::INFINITY, f64::min);
                (n as f64, m)
            })
            .collect(),
    );
    out.metric("lower_bound", &reports);
    out.metric("regular_set_size", generated.len());
    out.json("tree_algebra.json", &report)?;
    Ok(out)
}
