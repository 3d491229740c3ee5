use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gfsb_core::algebra::{CoefficientMap, RegularityParams, TreeSymbol};
use gfsb_core::noise::{sample_y, NoiseConfig};
use gfsb_core::solver::{
    smooth_initial_condition, solve_mollified_with, solve_paracontrolled, solve_subcritical, EnhancedData,
    OperatorBundle, SolverOptions,
};
use gfsb_core::spectral::{Grid, MollifierProfile};
use gfsb_core::trees::{recenter, sample_stationary_trees, DEFAULT_BURN_IN_TOL};
use gfsb_harness::config::ConfigDoc;
use gfsb_harness::experiments::{identity_report, ou_covariance_rows, tree_algebra_report};
use gfsb_harness::manifest::{env_threads, write_atomic};
use gfsb_harness::outcome::num;
use gfsb_harness::persist::write_trajectory;
use gfsb_harness::{emit_plot_data, run_with_threads, ExperimentKind, ExperimentSpec, HarnessError, Params};
use serde_json::json;

#[derive(Parser)]
#[command(name = "gfsb", version, about = "Numerical laboratory for the fractional singular stochastic Burgers equation")]
struct Cli {
    /// Directory for every artifact.
    #[arg(long, global = true, default_value = "gfsb-out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum SymbolArg {
    #[value(name = "Y")]
    Y,
    #[value(name = "lr")]
    Lr,
    #[value(name = "rLlr")]
    Rllr,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Direct,
    Subcritical,
    Paracontrolled,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generated symbols, regularities and the regular pair set as JSON.
    TreeAlgebra {
        #[arg(long, default_value_t = -0.2, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.5)]
        b: f64,
        #[arg(long, default_value_t = 8)]
        max_leaves: usize,
        #[arg(long, default_value = "n, lr, rLlr")]
        symbols: String,
    },
    /// Samples one tree and writes its trajectory manifest.
    SampleTree {
        #[arg(long, value_enum)]
        symbol: SymbolArg,
        /// Recentered `X` instead of the stationary tree.
        #[arg(long)]
        recenter: bool,
        #[arg(long, default_value_t = 64)]
        n_modes: usize,
        #[arg(long, default_value_t = 1.75)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0625)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 0.1)]
        t_end: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BURN_IN_TOL)]
        burn_tol: f64,
    },
    /// Empirical against exact OU covariances, written as CSV.
    CheckCovariance {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides of the covariance parameters, `key=value`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Bony, partition-of-unity and modified paraproduct invariants as JSON.
    VerifyIdentities {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Solves once from a key=value config file.
    Solve {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        config: PathBuf,
    },
    /// The coupled-noise epsilon ladder.
    ConvergeEps {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Runs an experiment spec; `--out` replaces its output_dir when given.
    Run {
        spec: PathBuf,
        /// Also write two-column plot CSVs.
        #[arg(long)]
        plot: bool,
    },
}

/// Prints to stdout; a closed pipe (`gfsb ... | head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn io(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| io(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn overrides(set: &[String]) -> Result<BTreeMap<String, String>, HarnessError> {
    set.iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| HarnessError::Validation(format!("expected KEY=VALUE, got `{kv}`")))
        })
        .collect()
}

/// Runs a spec built from the command line and reports it like `run`.
fn run_kind(kind: ExperimentKind, name: &str, seed: u64, set: &[String], out: &Path) -> Result<bool, HarnessError> {
    let spec = ExperimentSpec {
        name: name.to_string(),
        kind,
        parameters: overrides(set)?,
        seeds: vec![seed],
        output_dir: out.to_path_buf(),
    };
    report(run_with_threads(&spec, env_threads()))
}

fn report(r: Result<gfsb_harness::RunManifest, HarnessError>) -> Result<bool, HarnessError> {
    let m = match r {
        Ok(m) => m,
        Err(HarnessError::TaskFailure { task, message, .. }) => {
            eprintln!("task `{task}` errored: {message}");
            return Ok(false);
        }
        Err(e) => return Err(e),
    };
    for (task, a) in m.failed_assertions() {
        eprintln!("FAIL {task}/{}: value {} threshold {} {}", a.name, a.value, a.threshold, a.detail);
    }
    println!("{} {} ({} tasks) -> {}", if m.passed() { "PASS" } else { "FAIL" }, m.name, m.tasks.len(), m.output_dir.display());
    Ok(m.passed())
}

fn sample_tree(
    symbol: SymbolArg,
    recentered: bool,
    config: NoiseConfig,
    grid: Grid,
    burn_tol: f64,
    out: &Path,
) -> Result<PathBuf, HarnessError> {
    config.validate(grid)?;
    let gamma = config.gamma;
    let (name, tr) = match (symbol, recentered) {
        (SymbolArg::Y, _) => ("Y".to_string(), sample_y(&config, grid)?.slice_from(0.0)),
        (s, rec) => {
            let trees = sample_stationary_trees(&config, grid, burn_tol)?;
            let sym = if matches!(s, SymbolArg::Lr) { TreeSymbol::lr() } else { TreeSymbol::rllr() };
            if rec {
                (format!("X^{}", sym.name()), recenter(&sym, &trees, gamma)?.trajectory)
            } else {
                let t = if matches!(s, SymbolArg::Lr) { trees.ylr } else { trees.yrllr };
                (format!("Y^{}", sym.name()), t.trajectory.slice_from(0.0))
            }
        }
    };
    let stem = name.replace('^', "_");
    let extra = json!({ "recentered": recentered, "burn_tol": burn_tol, "config": config });
    write_trajectory(out, &stem, &name, &tr, config.beta, extra)
}

fn get<T: std::str::FromStr>(doc: &ConfigDoc, key: &str, default: Option<T>) -> Result<T, HarnessError> {
    match doc.root().get(key) {
        Some(v) => v.parse().map_err(|_| HarnessError::Validation(format!("`{key}` has a malformed value `{v}`"))),
        None => default.ok_or_else(|| HarnessError::Validation(format!("missing key `{key}`"))),
    }
}

const SOLVE_KEYS: [&str; 16] = [
    "gamma", "beta", "epsilon", "n_modes", "dt", "t_end", "seed", "tol", "nu", "alpha", "b", "u0_amplitude",
    "bundle", "profile", "calibrated", "max_iter",
];

fn solve(mode: Mode, path: &Path, out: &Path) -> Result<(), HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    let doc = ConfigDoc::parse(&text).map_err(|e| HarnessError::Validation(e.to_string()))?;
    for k in doc.root().keys() {
        if !SOLVE_KEYS.contains(&k.as_str()) {
            return Err(HarnessError::Validation(format!("unknown key `{k}`")));
        }
    }
    for s in doc.section_names() {
        if !s.is_empty() && s != "coefficients" {
            return Err(HarnessError::Validation(format!("unknown section [{s}]")));
        }
    }
    let gamma: f64 = get(&doc, "gamma", None)?;
    let grid = Grid::new(get(&doc, "n_modes", None)?, gamma)?;
    let mut config = NoiseConfig::new(
        gamma,
        get(&doc, "epsilon", None)?,
        get(&doc, "seed", Some(0))?,
        get(&doc, "dt", None)?,
        get(&doc, "t_end", None)?,
    );
    config.beta = get(&doc, "beta", Some(0.5))?;
    if get(&doc, "calibrated", Some(false))? {
        config = config.calibrated();
    }
    let profile = get::<String>(&doc, "profile", Some("bump".into()))?;
    config.profile = MollifierProfile::parse(&profile)
        .ok_or_else(|| HarnessError::Validation(format!("unknown profile `{profile}`")))?;
    config.validate(grid)?;
    let opts = SolverOptions {
        nu: get(&doc, "nu", Some(0.5))?,
        tol: get(&doc, "tol", Some(1e-9))?,
        max_iter: get(&doc, "max_iter", Some(50))?,
        ..Default::default()
    };
    let params = RegularityParams::new(get(&doc, "alpha", Some(-0.2))?, get(&doc, "b", Some(0.5))?)?;
    let mut c = CoefficientMap::solver_default();
    if let Some(sec) = doc.section("coefficients") {
        for (k, v) in sec {
            let val = v.parse().map_err(|_| HarnessError::Validation(format!("coefficient `{k}` = `{v}`")))?;
            c.set(TreeSymbol::parse(k)?, val);
        }
    }
    let u0 = smooth_initial_condition(grid, get(&doc, "u0_amplitude", Some(0.5))?);
    let y = sample_y(&config, grid)?.slice_from(0.0);
    let t_end = config.t_end;
    let (u, diagnostics) = match mode {
        Mode::Direct => {
            let d = solve_mollified_with(&y, &u0, &opts)?;
            (d.u, json!({ "mode": "direct", "diagnostics": d.diagnostics }))
        }
        Mode::Subcritical => {
            let x = EnhancedData::from_y(&y, gamma, params)?;
            let s = solve_subcritical(&x, &c, &u0, t_end, &opts)?;
            let d = json!({
                "mode": "subcritical",
                "slabs": s.slabs,
                "scheme_residual": s.scheme_residual,
                "mild_residual": s.mild_residual,
                "tree_norms": x.norm_records()?,
            });
            (s.reconstruct(), d)
        }
        Mode::Paracontrolled => {
            let bundle = get::<String>(&doc, "bundle", Some("default".into()))?;
            let bundle = OperatorBundle::parse(&bundle)
                .ok_or_else(|| HarnessError::Validation(format!("unknown bundle `{bundle}`")))?;
            let x = EnhancedData::from_y(&y, gamma, params)?;
            let p = solve_paracontrolled(&x, &c, &u0, bundle, t_end, &opts)?;
            let d = json!({
                "mode": "paracontrolled",
                "tau_m": p.tau_m.name(),
                "slabs": p.slabs,
                "ansatz_residual": p.ansatz_residual,
                "mild_residual": p.mild_residual,
                "blowup_functional": p.blowup_functional,
                "tree_norms": x.norm_records()?,
            });
            (p.reconstruct(), d)
        }
    };
    let manifest = write_trajectory(out, "u", "u", &u.with_meta(y.meta().clone()), config.beta, json!({ "source": path }))?;
    write_json(&out.join("diagnostics.json"), &diagnostics)?;
    println!("{}", manifest.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool, HarnessError> {
    let out = cli.out;
    match cli.cmd {
        Cmd::TreeAlgebra { alpha, b, max_leaves, symbols } => {
            let selected = symbols.split(',').map(|s| TreeSymbol::parse(s.trim())).collect::<Result<Vec<_>, _>>()?;
            let r = tree_algebra_report(RegularityParams::new(alpha, b)?, max_leaves, &selected)?;
            write_json(&out.join("tree_algebra.json"), &r)?;
            emit(&serde_json::to_string_pretty(&r).map_err(|e| HarnessError::Io(e.to_string()))?);
            Ok(true)
        }
        Cmd::SampleTree { symbol, recenter, n_modes, gamma, epsilon, dt, t_end, seed, burn_tol } => {
            let config = NoiseConfig::new(gamma, epsilon, seed, dt, t_end);
            let path = sample_tree(symbol, recenter, config, Grid::new(n_modes, gamma)?, burn_tol, &out)?;
            println!("{}", path.display());
            Ok(true)
        }
        Cmd::CheckCovariance { seed, set } => {
            let mut raw = overrides(&set)?;
            raw.entry("target".into()).or_insert_with(|| "ou".into());
            let params = Params::resolve(ExperimentKind::Covariance, &raw)?;
            let rows = ou_covariance_rows(&params, seed)?;
            std::fs::create_dir_all(&out).map_err(|e| io(&out, e))?;
            let path = out.join("covariance.csv");
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| io(&path, e);
            w.write_record(["gamma", "modes", "t", "s", "analytic", "empirical", "stderr", "within"]).map_err(err)?;
            for r in &rows {
                w.write_record([
                    num(r.gamma),
                    format!("{}:{}", r.modes.0, r.modes.1),
                    num(r.t),
                    num(r.s),
                    num(r.analytic),
                    num(r.empirical),
                    num(r.stderr),
                    r.within.to_string(),
                ])
                .map_err(err)?;
            }
            write_atomic(&path, &w.into_inner().map_err(|e| io(&path, e))?)?;
            let frac = rows.iter().filter(|r| r.within).count() as f64 / rows.len() as f64;
            println!("{} cells, {:.1}% within {} SE -> {}", rows.len(), 100.0 * frac, params.float("se_factor"), path.display());
            Ok(frac >= params.float("min_fraction"))
        }
        Cmd::VerifyIdentities { seed, set } => {
            let params = Params::resolve(ExperimentKind::IdentitySuite, &overrides(&set)?)?;
            let r = identity_report(&params, seed)?;
            let summary = json!({
                "passed": r.passed,
                "tol": r.tol,
                "fields": r.fields,
                "n_modes": r.n_modes,
                "max_bony_error": r.max_bony_error,
                "max_partition_error": r.max_partition_error,
                "max_modified_error": r.max_modified_error,
            });
            write_json(&out.join("identities.json"), &r)?;
            emit(&serde_json::to_string_pretty(&summary).map_err(|e| HarnessError::Io(e.to_string()))?);
            Ok(r.passed)
        }
        Cmd::Solve { mode, config } => solve(mode, &config, &out).map(|_| true),
        Cmd::ConvergeEps { seed, set } => run_kind(ExperimentKind::EpsConvergence, "converge-eps", seed, &set, &out),
        Cmd::Run { spec, plot } => {
            let mut spec = ExperimentSpec::from_file(&spec)?;
            if std::env::args().any(|a| a == "--out" || a.starts_with("--out=")) {
                spec.output_dir = out;
            }
            let result = run_with_threads(&spec, env_threads());
            if plot {
                if let Ok(m) = &result {
                    for p in emit_plot_data(m)? {
                        println!("{}", p.display());
                    }
                }
            }
            report(result)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = env_threads() {
        // ignore failure: the pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
