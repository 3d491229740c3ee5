//! The twelve acceptance criteria, one shipped spec each. Every spec pins its
//! own tolerances; this file only redirects the output into a temporary
//! directory and reports.

use std::path::PathBuf;

use gfsb_harness::{run, ExperimentSpec, HarnessError};

fn spec_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../experiments").join(file)
}

fn criterion(id: u32, file: &str) {
    let mut spec = ExperimentSpec::from_file(&spec_path(file)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    spec.output_dir = dir.path().to_path_buf();
    let manifest = match run(&spec) {
        Ok(m) => m,
        Err(HarnessError::TaskFailure { task, message, manifest }) => {
            println!("criterion {id:>2} FAIL {} ({:.1} s): task `{task}` errored: {message}", spec.name, manifest.wall_seconds);
            panic!("criterion {id} errored");
        }
        Err(e) => panic!("criterion {id}: {e}"),
    };
    let verdict = if manifest.passed() { "PASS" } else { "FAIL" };
    println!("criterion {id:>2} {verdict} {} ({:.1} s)", spec.name, manifest.wall_seconds);
    for (task, a) in manifest.failed_assertions() {
        println!("    {task} / {}: value {:.6e}, threshold {:.6e}; {}", a.name, a.value, a.threshold, a.detail);
    }
    assert!(manifest.passed(), "criterion {id} failed");
}

#[test]
fn criterion_01_identity_suite() {
    criterion(1, "crit01_identities.conf");
}

#[test]
fn criterion_02_appendix_identities() {
    criterion(2, "crit02_appendix.conf");
}

#[test]
fn criterion_03_ou_covariance() {
    criterion(3, "crit03_ou_covariance.conf");
}

#[test]
fn criterion_04_wick_oracle() {
    criterion(4, "crit04_wick.conf");
}

#[test]
fn criterion_05_ylr_covariance() {
    criterion(5, "crit05_ylr_covariance.conf");
}

#[test]
fn criterion_06_regularity_ladder() {
    criterion(6, "crit06_regularity_ladder.conf");
}

#[test]
fn criterion_07_summability() {
    criterion(7, "crit07_summability.conf");
}

#[test]
fn criterion_08_tree_algebra() {
    criterion(8, "crit08_tree_algebra.conf");
}

#[test]
fn criterion_09_solver_degeneration() {
    criterion(9, "crit09_degeneration.conf");
}

#[test]
fn criterion_10_reconstruction() {
    criterion(10, "crit10_reconstruction.conf");
}

#[test]
fn criterion_11_eps_cauchy() {
    criterion(11, "crit11_eps_cauchy.conf");
}

#[test]
fn criterion_12_continuous_dependence() {
    criterion(12, "crit12_dependence.conf");
}
