//! Experiment specifications and their parameter schemas.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ConfigDoc;
use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    IdentitySuite,
    Covariance,
    RegularityLadder,
    EpsConvergence,
    SolverConsistency,
    DependenceProbe,
    TreeAlgebraAudit,
    AppendixIntegrals,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        ExperimentKind::IdentitySuite,
        ExperimentKind::Covariance,
        ExperimentKind::RegularityLadder,
        ExperimentKind::EpsConvergence,
        ExperimentKind::SolverConsistency,
        ExperimentKind::DependenceProbe,
        ExperimentKind::TreeAlgebraAudit,
        ExperimentKind::AppendixIntegrals,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::IdentitySuite => "identity-suite",
            ExperimentKind::Covariance => "covariance",
            ExperimentKind::RegularityLadder => "regularity-ladder",
            ExperimentKind::EpsConvergence => "eps-convergence",
            ExperimentKind::SolverConsistency => "solver-consistency",
            ExperimentKind::DependenceProbe => "dependence-probe",
            ExperimentKind::TreeAlgebraAudit => "tree-algebra-audit",
            ExperimentKind::AppendixIntegrals => "appendix-integrals",
        }
    }

    /// Whether the kind draws random numbers and so needs exactly one base seed.
    pub fn needs_seed(&self) -> bool {
        !matches!(self, ExperimentKind::TreeAlgebraAudit | ExperimentKind::AppendixIntegrals)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| HarnessError::Validation(format!("unknown experiment kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamType {
    Float,
    Int,
    FloatList,
    IntList,
    Text,
    Bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Float(f64),
    Int(i64),
    FloatList(Vec<f64>),
    IntList(Vec<i64>),
    Text(String),
    Bool(bool),
}

/// One schema entry; `default: None` makes the key required.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub ty: ParamType,
    pub default: Option<&'static str>,
}

const fn p(key: &'static str, ty: ParamType, default: &'static str) -> ParamSpec {
    ParamSpec { key, ty, default: Some(default) }
}

const fn req(key: &'static str, ty: ParamType) -> ParamSpec {
    ParamSpec { key, ty, default: None }
}

use ParamType::*;

const IDENTITY: &[ParamSpec] = &[
    p("n_modes", Int, "256"),
    p("fields", Int, "100"),
    p("decay", Float, "0.5"),
    p("tol", Float, "1e-12"),
    p("gamma", Float, "1.75"),
    p("time_nodes", Int, "16"),
    p("dt", Float, "1e-3"),
    p("max_seconds", Float, "10"),
];

const COVARIANCE: &[ParamSpec] = &[
    req("target", Text),
    p("gammas", FloatList, "1.6, 2.0"),
    p("modes", Text, "1, 2, 4"),
    p("samples", Int, "10000"),
    p("n_modes", Int, "8"),
    p("epsilon", Float, "0.125"),
    p("times", FloatList, "0, 0.05, 0.1, 0.15, 0.2"),
    p("dt", Float, "0.05"),
    p("burn_tol", Float, "1e-3"),
    p("se_factor", Float, "3"),
    p("min_fraction", Float, "0.95"),
    p("max_seconds", Float, "120"),
];

const LADDER: &[ParamSpec] = &[
    p("n_modes", Int, "1024"),
    p("epsilon", Float, "0.0009765625"),
    p("gamma", Float, "1.75"),
    p("dt", Float, "5e-5"),
    p("t_end", Float, "0.05"),
    p("samples", Int, "64"),
    p("j_min", Int, "3"),
    p("j_max", Int, "8"),
    p("min_exponent_y", Float, "-0.35"),
    p("min_exponent_lr", Float, "-0.10"),
    p("min_exponent_rllr", Float, "0.15"),
    p("max_seconds", Float, "600"),
];

const EPS: &[ParamSpec] = &[
    p("n_modes", Int, "512"),
    p("gamma", Float, "1.75"),
    p("epsilons", FloatList, "0.25, 0.125, 0.0625, 0.03125"),
    p("replicas", Int, "32"),
    p("dt", Float, "1e-4"),
    p("t_end", Float, "0.1"),
    p("u0_amplitude", Float, "0.5"),
    p("sobolev_s", Float, "-0.3"),
    p("profile", Text, "bump"),
    p("nu", Float, "0.5"),
    p("max_seconds", Float, "1800"),
];

const CONSISTENCY: &[ParamSpec] = &[
    req("target", Text),
    p("n_modes", Int, "64"),
    p("gamma", Float, "1.75"),
    p("alpha", Float, "-0.2"),
    p("b", Float, "0.5"),
    p("epsilon", Float, "0.0625"),
    p("dt", Float, "1e-3"),
    p("t_end", Float, "0.2"),
    p("u0_amplitude", Float, "1.0"),
    p("tol", Float, "1e-12"),
    p("nu", Float, "0.5"),
    p("bundle", Text, "zero"),
    p("sobolev_s", Float, "-0.3"),
    p("match_tol", Float, "1e-8"),
    p("order_dts", FloatList, "4e-3, 2e-3, 1e-3, 5e-4, 2.5e-4"),
    p("order_target", Float, "2.0"),
    p("order_tol", Float, "0.3"),
    p("max_relative_error", Float, "0.05"),
    p("max_seconds", Float, "120"),
];

const DEPENDENCE: &[ParamSpec] = &[
    p("n_modes", Int, "128"),
    p("gamma", Float, "1.75"),
    p("alpha", Float, "-0.2"),
    p("b", Float, "0.5"),
    p("epsilon", Float, "0.0625"),
    p("dt", Float, "5e-4"),
    p("t_end", Float, "0.2"),
    p("tol", Float, "1e-12"),
    p("nu", Float, "0.5"),
    p("u0_amplitude", Float, "0.5"),
    p("direction_mode", Int, "2"),
    p("hs", FloatList, "1e-1, 1e-2, 1e-3, 1e-4, 1e-5"),
    p("slope_target", Float, "1.0"),
    p("slope_tol", Float, "0.15"),
    p("noise_epsilons", FloatList, "0.125, 0.0625, 0.03125"),
    p("max_seconds", Float, "300"),
];

const ALGEBRA: &[ParamSpec] = &[
    p("params", Text, "-0.24:0.5, -0.2:0.5, -0.1:0.6"),
    p("max_leaves", Int, "8"),
    p("regular_alpha", Float, "-0.2"),
    p("regular_b", Float, "0.5"),
    p("symbols", Text, "n, lr, rLlr"),
    req("expected_pairs", Text),
    p("max_seconds", Float, "1"),
];

const APPENDIX: &[ParamSpec] = &[
    req("target", Text),
    p("triples", Int, "50"),
    p("witnesses", Int, "40"),
    p("rate_min", Float, "0.1"),
    p("rate_max", Float, "10"),
    p("delta_max", Float, "3"),
    p("tol", Float, "1e-8"),
    p("gamma", Float, "1.75"),
    p("draw_seed", Int, "17"),
    p("a_max", Int, "2048"),
    p("cutoff", Int, "4096"),
    p("exponent", Float, "0.6"),
    p("max_ratio", Float, "2"),
    p("a_prime", Float, "0.05"),
    p("convergent_gamma", Float, "1.6"),
    p("divergent_gamma", Float, "1.2"),
    p("max_seconds", Float, "30"),
];

pub fn schema(kind: ExperimentKind) -> &'static [ParamSpec] {
    match kind {
        ExperimentKind::IdentitySuite => IDENTITY,
        ExperimentKind::Covariance => COVARIANCE,
        ExperimentKind::RegularityLadder => LADDER,
        ExperimentKind::EpsConvergence => EPS,
        ExperimentKind::SolverConsistency => CONSISTENCY,
        ExperimentKind::DependenceProbe => DEPENDENCE,
        ExperimentKind::TreeAlgebraAudit => ALGEBRA,
        ExperimentKind::AppendixIntegrals => APPENDIX,
    }
}

/// Admissible values of the `target` key for kinds that have one.
fn targets(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::Covariance => &["ou", "wick", "ylr"],
        ExperimentKind::SolverConsistency => &["degeneration", "reconstruction"],
        ExperimentKind::AppendixIntegrals => &["identities", "summability"],
        _ => &[],
    }
}

fn parse_value(ty: ParamType, raw: &str) -> Result<ParamValue, String> {
    let list = || raw.split(',').map(str::trim).filter(|s| !s.is_empty());
    match ty {
        Float => raw.parse().map(ParamValue::Float).map_err(|_| format!("`{raw}` is not a number")),
        Int => raw.parse().map(ParamValue::Int).map_err(|_| format!("`{raw}` is not an integer")),
        FloatList => list()
            .map(|s| s.parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
            .collect::<Result<Vec<_>, _>>()
            .map(ParamValue::FloatList),
        IntList => list()
            .map(|s| s.parse::<i64>().map_err(|_| format!("`{s}` is not an integer")))
            .collect::<Result<Vec<_>, _>>()
            .map(ParamValue::IntList),
        Text => Ok(ParamValue::Text(raw.to_string())),
        Bool => match raw {
            "true" | "yes" | "1" => Ok(ParamValue::Bool(true)),
            "false" | "no" | "0" => Ok(ParamValue::Bool(false)),
            _ => Err(format!("`{raw}` is not a boolean")),
        },
    }
}

/// Parameters resolved against a schema: every key present and typed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    values: BTreeMap<String, ParamValue>,
}

impl Params {
    pub fn resolve(kind: ExperimentKind, raw: &BTreeMap<String, String>) -> Result<Self, HarnessError> {
        let schema = schema(kind);
        let bad = |m: String| HarnessError::Validation(format!("{kind}: {m}"));
        for key in raw.keys() {
            if !schema.iter().any(|s| s.key == key) {
                return Err(bad(format!("unknown parameter `{key}`")));
            }
        }
        let mut values = BTreeMap::new();
        for s in schema {
            let text = match (raw.get(s.key), s.default) {
                (Some(v), _) => v.as_str(),
                (None, Some(d)) => d,
                (None, None) => return Err(bad(format!("missing required parameter `{}`", s.key))),
            };
            let v = parse_value(s.ty, text).map_err(|m| bad(format!("{}: {m}", s.key)))?;
            values.insert(s.key.to_string(), v);
        }
        let out = Params { values };
        let allowed = targets(kind);
        if !allowed.is_empty() {
            let t = out.text("target");
            if !allowed.contains(&t) {
                return Err(bad(format!("target `{t}` not one of {allowed:?}")));
            }
        }
        for (key, v) in &out.values {
            let finite = match v {
                ParamValue::Float(x) => x.is_finite(),
                ParamValue::FloatList(xs) => xs.iter().all(|x| x.is_finite()),
                _ => true,
            };
            if !finite {
                return Err(bad(format!("{key} must be finite")));
            }
        }
        if !(out.float("max_seconds") > 0.0) {
            return Err(bad("max_seconds must be positive".into()));
        }
        Ok(out)
    }

    fn get(&self, key: &str) -> &ParamValue {
        self.values.get(key).unwrap_or_else(|| panic!("parameter `{key}` is not in the schema"))
    }

    pub fn float(&self, key: &str) -> f64 {
        match self.get(key) {
            ParamValue::Float(x) => *x,
            ParamValue::Int(i) => *i as f64,
            v => panic!("parameter `{key}` is {v:?}, not a number"),
        }
    }

    pub fn int(&self, key: &str) -> i64 {
        match self.get(key) {
            ParamValue::Int(i) => *i,
            v => panic!("parameter `{key}` is {v:?}, not an integer"),
        }
    }

    /// Non-negative integer parameter.
    pub fn count(&self, key: &str) -> Result<usize, HarnessError> {
        usize::try_from(self.int(key)).map_err(|_| HarnessError::Validation(format!("{key} must be non-negative")))
    }

    pub fn floats(&self, key: &str) -> &[f64] {
        match self.get(key) {
            ParamValue::FloatList(x) => x,
            v => panic!("parameter `{key}` is {v:?}, not a list"),
        }
    }

    pub fn ints(&self, key: &str) -> &[i64] {
        match self.get(key) {
            ParamValue::IntList(x) => x,
            v => panic!("parameter `{key}` is {v:?}, not a list"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.get(key) {
            ParamValue::Text(x) => x,
            v => panic!("parameter `{key}` is {v:?}, not text"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        match self.get(key) {
            ParamValue::Bool(x) => *x,
            v => panic!("parameter `{key}` is {v:?}, not a boolean"),
        }
    }

    /// Comma-separated text entries.
    pub fn items(&self, key: &str) -> Vec<&str> {
        self.text(key).split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    pub parameters: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
}

const ROOT_KEYS: [&str; 4] = ["name", "kind", "seeds", "output_dir"];

impl ExperimentSpec {
    /// Reads a spec file; a relative `output_dir` is resolved against the
    /// current directory, not the file's location.
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let doc = ConfigDoc::parse(text).map_err(|e| HarnessError::Validation(e.to_string()))?;
        for s in doc.section_names() {
            if !s.is_empty() && s != "parameters" {
                return Err(HarnessError::Validation(format!("unknown section [{s}]")));
            }
        }
        let root = doc.root();
        for k in root.keys() {
            if !ROOT_KEYS.contains(&k.as_str()) {
                return Err(HarnessError::Validation(format!("unknown top-level key `{k}`")));
            }
        }
        let need = |k: &str| {
            root.get(k).cloned().ok_or_else(|| HarnessError::Validation(format!("missing top-level key `{k}`")))
        };
        let seeds = match root.get("seeds") {
            None => Vec::new(),
            Some(s) => s
                .split(',')
                .map(str::trim)
                .filter(|x| !x.is_empty())
                .map(|x| x.parse::<u64>().map_err(|_| HarnessError::Validation(format!("seed `{x}` is not a u64"))))
                .collect::<Result<_, _>>()?,
        };
        let spec = ExperimentSpec {
            name: need("name")?,
            kind: need("kind")?.parse()?,
            parameters: doc.section("parameters").cloned().unwrap_or_default(),
            seeds,
            output_dir: PathBuf::from(need("output_dir")?),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Resolves the parameters against the kind's schema and checks the seeds.
    pub fn validate(&self) -> Result<Params, HarnessError> {
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            return Err(HarnessError::Validation(format!("name `{}` must be non-empty [A-Za-z0-9._-]", self.name)));
        }
        if self.kind.needs_seed() && self.seeds.len() != 1 {
            return Err(HarnessError::Validation(format!(
                "{} needs exactly one base seed, got {}",
                self.kind,
                self.seeds.len()
            )));
        }
        Params::resolve(self.kind, &self.parameters)
    }

    pub fn to_doc(&self) -> ConfigDoc {
        let mut doc = ConfigDoc::default();
        doc.set("", "name", &self.name);
        doc.set("", "kind", self.kind.as_str());
        if !self.seeds.is_empty() {
            let s: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
            doc.set("", "seeds", &s.join(", "));
        }
        doc.set("", "output_dir", &self.output_dir.to_string_lossy());
        for (k, v) in &self.parameters {
            doc.set("parameters", k, v);
        }
        doc
    }

    /// SHA-256 over everything that determines the numbers: name, kind, seeds
    /// and the fully resolved parameters. The output directory is excluded.
    pub fn hash(&self) -> Result<String, HarnessError> {
        let params = self.validate()?;
        let mut h = Sha256::new();
        h.update(self.name.as_bytes());
        h.update([0]);
        h.update(self.kind.as_str().as_bytes());
        h.update([0]);
        for s in &self.seeds {
            h.update(s.to_le_bytes());
        }
        h.update(serde_json::to_vec(&params).map_err(|e| HarnessError::Io(e.to_string()))?);
        Ok(format!("{:x}", h.finalize()))
    }

    pub fn seed(&self) -> u64 {
        self.seeds.first().copied().unwrap_or(0)
    }
}
