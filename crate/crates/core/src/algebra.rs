//! Tree symbols, the b-order regularity map and the regular pair set.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("regularity is not defined on the unit symbol")]
    UnitSymbol,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("unknown symbol name `{0}`")]
    UnknownName(String),
}

/// Canonical, commutative tree symbol. Children of a product are ordered by key.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum TreeSymbol {
    Unit,
    Generator,
    Product(Arc<TreeSymbol>, Arc<TreeSymbol>),
}

impl TreeSymbol {
    pub fn unit() -> Self {
        TreeSymbol::Unit
    }

    pub fn generator() -> Self {
        TreeSymbol::Generator
    }

    /// Product with the unit law applied and children sorted by canonical key.
    pub fn product(a: &TreeSymbol, b: &TreeSymbol) -> Self {
        match (a, b) {
            (TreeSymbol::Unit, x) | (x, TreeSymbol::Unit) => x.clone(),
            _ => {
                let (lo, hi) = if a.canonical_key() <= b.canonical_key() {
                    (a, b)
                } else {
                    (b, a)
                };
                TreeSymbol::Product(Arc::new(lo.clone()), Arc::new(hi.clone()))
            }
        }
    }

    /// `n`: the generator.
    pub fn n() -> Self {
        TreeSymbol::Generator
    }

    /// `lr = n·n`.
    pub fn lr() -> Self {
        TreeSymbol::product(&Self::n(), &Self::n())
    }

    /// `rLlr = n·lr`.
    pub fn rllr() -> Self {
        TreeSymbol::product(&Self::n(), &Self::lr())
    }

    pub fn canonical_key(&self) -> String {
        match self {
            TreeSymbol::Unit => "1".to_string(),
            TreeSymbol::Generator => "*".to_string(),
            TreeSymbol::Product(a, b) => format!("({}.{})", a.canonical_key(), b.canonical_key()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeSymbol::Unit => 0,
            TreeSymbol::Generator => 1,
            TreeSymbol::Product(a, b) => a.leaves() + b.leaves(),
        }
    }

    pub fn is_product(&self) -> bool {
        matches!(self, TreeSymbol::Product(..))
    }

    /// Short name for the three named trees, canonical key otherwise.
    pub fn name(&self) -> String {
        if *self == Self::n() {
            "n".into()
        } else if *self == Self::lr() {
            "lr".into()
        } else if *self == Self::rllr() {
            "rLlr".into()
        } else {
            self.canonical_key()
        }
    }

    /// Parses `n`/`Y`, `lr`, `rLlr`, `1` or a canonical key.
    pub fn parse(name: &str) -> Result<Self, AlgebraError> {
        match name.trim() {
            "n" | "Y" | "*" => Ok(Self::n()),
            "lr" => Ok(Self::lr()),
            "rLlr" => Ok(Self::rllr()),
            "1" => Ok(Self::Unit),
            s if s.starts_with('(') => parse_key(s).ok_or_else(|| AlgebraError::UnknownName(s.into())),
            s => Err(AlgebraError::UnknownName(s.into())),
        }
    }
}

fn parse_key(s: &str) -> Option<TreeSymbol> {
    fn go(s: &[u8], pos: &mut usize) -> Option<TreeSymbol> {
        match *s.get(*pos)? {
            b'*' => {
                *pos += 1;
                Some(TreeSymbol::Generator)
            }
            b'1' => {
                *pos += 1;
                Some(TreeSymbol::Unit)
            }
            b'(' => {
                *pos += 1;
                let a = go(s, pos)?;
                if *s.get(*pos)? != b'.' {
                    return None;
                }
                *pos += 1;
                let b = go(s, pos)?;
                if *s.get(*pos)? != b')' {
                    return None;
                }
                *pos += 1;
                Some(TreeSymbol::product(&a, &b))
            }
            _ => None,
        }
    }
    let mut pos = 0;
    let t = go(s.as_bytes(), &mut pos)?;
    (pos == s.len()).then_some(t)
}

impl fmt::Debug for TreeSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for TreeSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl PartialOrd for TreeSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by leaf count, then canonical key.
impl Ord for TreeSymbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.leaves(), self.canonical_key()).cmp(&(other.leaves(), other.canonical_key()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityParams {
    pub alpha: f64,
    pub b: f64,
}

impl RegularityParams {
    pub fn new(alpha: f64, b: f64) -> Result<Self, AlgebraError> {
        if !(b > 0.0) {
            return Err(AlgebraError::PreconditionViolated(format!("b must be positive, got {b}")));
        }
        Ok(Self { alpha, b })
    }

    /// `alpha + b > 0`.
    pub fn subcritical_usable(&self) -> bool {
        self.alpha + self.b > 0.0
    }

    /// `2 alpha + b > 0`.
    pub fn subcritical(&self) -> bool {
        2.0 * self.alpha + self.b > 0.0
    }
}

/// Regularity by plain structural recursion.
pub fn regularity(sym: &TreeSymbol, params: &RegularityParams) -> Result<f64, AlgebraError> {
    match sym {
        TreeSymbol::Unit => Err(AlgebraError::UnitSymbol),
        TreeSymbol::Generator => Ok(params.alpha),
        TreeSymbol::Product(a, b) => {
            let ra = regularity(a, params)?;
            let rb = regularity(b, params)?;
            Ok(ra.min(rb).min(ra + rb) + params.b)
        }
    }
}

/// Regularity memoized by canonical key.
#[derive(Debug, Clone)]
pub struct RegularityTable {
    params: RegularityParams,
    cache: HashMap<String, f64>,
}

impl RegularityTable {
    pub fn new(params: RegularityParams) -> Self {
        Self { params, cache: HashMap::new() }
    }

    pub fn params(&self) -> RegularityParams {
        self.params
    }

    pub fn get(&mut self, sym: &TreeSymbol) -> Result<f64, AlgebraError> {
        let key = sym.canonical_key();
        if let Some(&r) = self.cache.get(&key) {
            return Ok(r);
        }
        let r = match sym {
            TreeSymbol::Unit => return Err(AlgebraError::UnitSymbol),
            TreeSymbol::Generator => self.params.alpha,
            TreeSymbol::Product(a, b) => {
                let ra = self.get(a)?;
                let rb = self.get(b)?;
                ra.min(rb).min(ra + rb) + self.params.b
            }
        };
        self.cache.insert(key, r);
        Ok(r)
    }
}

/// All canonical symbols with at most `max_leaves` generators, ordered so
/// that every product appears after both of its factors.
pub fn generate_regular_subset(max_leaves: usize) -> Vec<TreeSymbol> {
    let mut by_leaves: Vec<Vec<TreeSymbol>> = vec![Vec::new(); max_leaves + 1];
    if max_leaves >= 1 {
        by_leaves[1].push(TreeSymbol::Generator);
    }
    for n in 2..=max_leaves {
        let mut found: BTreeMap<String, TreeSymbol> = BTreeMap::new();
        for i in 1..=n / 2 {
            for a in &by_leaves[i] {
                for b in &by_leaves[n - i] {
                    let p = TreeSymbol::product(a, b);
                    found.entry(p.canonical_key()).or_insert(p);
                }
            }
        }
        by_leaves[n] = found.into_values().collect();
    }
    by_leaves.into_iter().flatten().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularSetEntry {
    pub left: String,
    pub right: String,
    pub sum_r: f64,
    #[serde(skip)]
    pub pair: (TreeSymbol, TreeSymbol),
}

/// Ordered pairs `(t1, t2)` from `symbols` with `r(t1) + r(t2) > 0`; a pair of
/// distinct symbols appears once per orientation.
pub fn regular_set(
    symbols: &[TreeSymbol],
    params: &RegularityParams,
) -> Result<Vec<RegularSetEntry>, AlgebraError> {
    let mut table = RegularityTable::new(*params);
    let mut out = Vec::new();
    for a in symbols {
        for b in symbols {
            let s = table.get(a)? + table.get(b)?;
            if s > 0.0 {
                out.push(RegularSetEntry {
                    left: a.name(),
                    right: b.name(),
                    sum_r: s,
                    pair: (a.clone(), b.clone()),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub max_leaves: usize,
    pub symbol_count: usize,
    pub bound: f64,
    /// Minimum of `r` over every enumerated symbol, the generator included.
    pub min_r_all: f64,
    /// Minimum of `r` over product symbols; this is what the lower bound governs.
    pub min_r_products: f64,
    pub argmin_products: String,
    pub holds: bool,
}

/// Exhaustive check of `r(t) >= 2 alpha + b` over all product symbols up to
/// `max_leaves` generators. The generator itself has `r = alpha < 2 alpha + b`
/// and is reported separately in `min_r_all`.
pub fn verify_lemma_r_bound(
    max_leaves: usize,
    params: &RegularityParams,
) -> Result<LemmaReport, AlgebraError> {
    if params.alpha + params.b <= 0.0 {
        return Err(AlgebraError::PreconditionViolated(format!(
            "alpha + b = {} must be positive",
            params.alpha + params.b
        )));
    }
    if params.alpha >= 0.0 {
        return Err(AlgebraError::PreconditionViolated(format!(
            "alpha = {} must be negative",
            params.alpha
        )));
    }
    let symbols = generate_regular_subset(max_leaves);
    let mut table = RegularityTable::new(*params);
    let mut min_all = f64::INFINITY;
    let mut min_prod = f64::INFINITY;
    let mut argmin = String::new();
    for s in &symbols {
        let r = table.get(s)?;
        min_all = min_all.min(r);
        if s.is_product() && r < min_prod {
            min_prod = r;
            argmin = s.name();
        }
    }
    let bound = 2.0 * params.alpha + params.b;
    Ok(LemmaReport {
        max_leaves,
        symbol_count: symbols.len(),
        bound,
        min_r_all: min_all,
        min_r_products: min_prod,
        argmin_products: argmin,
        holds: min_prod >= bound - 1e-12 || min_prod == f64::INFINITY,
    })
}

/// Coefficients `c(tau)` of the reconstruction `u = sum c(tau) X^tau + remainder`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientMap {
    entries: BTreeMap<TreeSymbol, f64>,
}

impl CoefficientMap {
    pub fn new() -> Self {
        Self { entries: BTreeMap::new() }
    }

    /// Literal table: `c(n) = 0, c(lr) = 1, c(rLlr) = 2`.
    pub fn literal() -> Self {
        let mut m = Self::new();
        m.set(TreeSymbol::n(), 0.0);
        m.set(TreeSymbol::lr(), 1.0);
        m.set(TreeSymbol::rllr(), 2.0);
        m
    }

    /// Table used by the solvers: `c(n) = 1, c(lr) = 1, c(rLlr) = 2`, so that
    /// `u = Y + X^lr + 2 X^rLlr + v`.
    pub fn solver_default() -> Self {
        let mut m = Self::literal();
        m.set(TreeSymbol::n(), 1.0);
        m
    }

    pub fn set(&mut self, sym: TreeSymbol, c: f64) {
        self.entries.insert(sym, c);
    }

    /// Zero for symbols without an entry.
    pub fn get(&self, sym: &TreeSymbol) -> f64 {
        self.entries.get(sym).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TreeSymbol, &f64)> {
        self.entries.iter()
    }
}

impl Default for CoefficientMap {
    fn default() -> Self {
        Self::solver_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> RegularityParams {
        RegularityParams::new(a, b).unwrap()
    }

    #[test]
    fn base_and_first_products() {
        let q = p(-0.2, 0.5);
        assert_eq!(regularity(&TreeSymbol::n(), &q).unwrap(), -0.2);
        assert!((regularity(&TreeSymbol::lr(), &q).unwrap() - 0.1).abs() < 1e-15);
        assert!((regularity(&TreeSymbol::rllr(), &q).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(regularity(&TreeSymbol::Unit, &q), Err(AlgebraError::UnitSymbol));
    }

    #[test]
    fn unit_is_neutral_and_product_commutes() {
        let t = TreeSymbol::lr();
        assert_eq!(TreeSymbol::product(&TreeSymbol::Unit, &t), t);
        let a = TreeSymbol::product(&TreeSymbol::n(), &TreeSymbol::lr());
        let b = TreeSymbol::product(&TreeSymbol::lr(), &TreeSymbol::n());
        assert_eq!(a.canonical_key(), b.canonical_key());
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(generate_regular_subset(2), vec![TreeSymbol::n(), TreeSymbol::lr()]);
        assert_eq!(
            generate_regular_subset(3),
            vec![TreeSymbol::n(), TreeSymbol::lr(), TreeSymbol::rllr()]
        );
        let four = generate_regular_subset(4);
        let lrlr = TreeSymbol::product(&TreeSymbol::lr(), &TreeSymbol::lr());
        let chain = TreeSymbol::product(&TreeSymbol::rllr(), &TreeSymbol::n());
        assert!(four.contains(&lrlr) && four.contains(&chain));
        assert_eq!(four.len(), 5);
    }

    #[test]
    fn parse_roundtrip() {
        for s in generate_regular_subset(6) {
            assert_eq!(TreeSymbol::parse(&s.canonical_key()).unwrap(), s);
        }
        assert_eq!(TreeSymbol::parse("rLlr").unwrap(), TreeSymbol::rllr());
        assert!(TreeSymbol::parse("bogus").is_err());
    }

    #[test]
    fn regular_set_examples() {
        let syms = [TreeSymbol::n(), TreeSymbol::lr(), TreeSymbol::rllr()];
        let r = regular_set(&syms, &p(-0.2, 0.5)).unwrap();
        let has = |a: &str, b: &str| r.iter().any(|e| e.left == a && e.right == b);
        assert!(has("lr", "lr"));
        assert!(has("n", "rLlr") && has("rLlr", "n"));
        assert!(!has("n", "n"));
        assert!(r.iter().all(|e| e.sum_r > 0.0));
    }

    #[test]
    fn lemma_examples() {
        let rep = verify_lemma_r_bound(6, &p(-0.2, 0.5)).unwrap();
        assert!(rep.holds);
        assert!((rep.min_r_products - 0.1).abs() < 1e-12);
        assert_eq!(rep.argmin_products, "lr");
        let rep = verify_lemma_r_bound(6, &p(-0.24, 0.5)).unwrap();
        assert!(rep.holds && (rep.min_r_products - 0.02).abs() < 1e-12);
        let q = p(-0.1, 0.6);
        let rep = verify_lemma_r_bound(2, &q).unwrap();
        assert!((rep.min_r_all - (-0.1f64).min(0.4)).abs() < 1e-12);
        assert!(verify_lemma_r_bound(4, &p(-0.6, 0.5)).is_err());
    }

    #[test]
    fn coefficient_tables() {
        let lit = CoefficientMap::literal();
        assert_eq!(lit.get(&TreeSymbol::n()), 0.0);
        assert_eq!(lit.get(&TreeSymbol::rllr()), 2.0);
        assert_eq!(CoefficientMap::solver_default().get(&TreeSymbol::n()), 1.0);
    }
}
