use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use gfsb_core::noise::{sample_y, NoiseConfig};
use gfsb_core::spectral::Grid;
use gfsb_harness::config::ConfigDoc;
use gfsb_harness::manifest::{MANIFEST_FILE, SUMMARY_FILE};
use gfsb_harness::persist::{read_trajectory, write_trajectory};
use gfsb_harness::{emit_plot_data, run_with_threads, ExperimentKind, ExperimentSpec, HarnessError, RunManifest, TaskStatus};
use proptest::prelude::*;

fn spec(kind: ExperimentKind, params: &[(&str, &str)], seeds: Vec<u64>, out: &Path) -> ExperimentSpec {
    ExperimentSpec {
        name: "probe".into(),
        kind,
        parameters: params.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        seeds,
        output_dir: out.to_path_buf(),
    }
}

fn small_covariance(out: &Path) -> ExperimentSpec {
    spec(
        ExperimentKind::Covariance,
        &[("target", "ou"), ("samples", "400"), ("gammas", "1.8"), ("modes", "1, 3"), ("times", "0, 0.05, 0.1")],
        vec![9],
        out,
    )
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

prop_compose! {
    fn key()(k in "[A-Za-z0-9_.-]{1,12}") -> String { k }
}

prop_compose! {
    fn value()(v in "[!-~]([ -~]{0,20}[!-~])?") -> String { v }
}

proptest! {
    #[test]
    fn config_round_trips(entries in proptest::collection::vec((prop_oneof![Just(String::new()), key()], key(), value()), 0..20)) {
        let mut doc = ConfigDoc::default();
        doc.set("", "name", "x");
        for (s, k, v) in &entries {
            doc.set(s, k, v);
        }
        let back = ConfigDoc::parse(&doc.to_canonical()).unwrap();
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn spec_text_round_trips(seed in any::<u64>(), samples in 2usize..100000) {
        let s = spec(
            ExperimentKind::Covariance,
            &[("target", "wick"), ("samples", &samples.to_string())],
            vec![seed],
            Path::new("out/dir"),
        );
        let back = ExperimentSpec::parse(&s.to_doc().to_canonical()).unwrap();
        prop_assert_eq!(back.hash().unwrap(), s.hash().unwrap());
        prop_assert_eq!(back.seeds, vec![seed]);
    }
}

#[test]
fn validation_errors() {
    let out = Path::new("unused");
    let bad = |s: ExperimentSpec| matches!(s.validate(), Err(HarnessError::Validation(_)));
    assert!(bad(spec(ExperimentKind::Covariance, &[("target", "ou"), ("bogus", "1")], vec![1], out)));
    assert!(bad(spec(ExperimentKind::Covariance, &[], vec![1], out)), "missing required target");
    assert!(bad(spec(ExperimentKind::Covariance, &[("target", "spectra")], vec![1], out)));
    assert!(bad(spec(ExperimentKind::Covariance, &[("target", "ou"), ("samples", "ten")], vec![1], out)));
    assert!(bad(spec(ExperimentKind::Covariance, &[("target", "ou")], vec![], out)), "needs a seed");
    assert!(bad(spec(ExperimentKind::IdentitySuite, &[("max_seconds", "0")], vec![1], out)));
    let mut named = spec(ExperimentKind::IdentitySuite, &[], vec![1], out);
    named.name = "has space".into();
    assert!(bad(named));
    assert!(spec(ExperimentKind::TreeAlgebraAudit, &[("expected_pairs", "lr:lr")], vec![], out).validate().is_ok());
    assert!(ExperimentSpec::parse("name = a\nkind = covariance\noutput_dir = o\n[extra]\nx = 1\n").is_err());
    assert!(ExperimentSpec::parse("name = a\nkind = nonsense\noutput_dir = o\n").is_err());
}

#[test]
fn hash_ignores_output_dir_but_not_parameters() {
    let a = small_covariance(Path::new("a"));
    let b = small_covariance(Path::new("b"));
    assert_eq!(a.hash().unwrap(), b.hash().unwrap());
    let mut c = small_covariance(Path::new("a"));
    c.parameters.insert("samples".into(), "401".into());
    assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    // an explicit default resolves to the same parameters
    let mut d = small_covariance(Path::new("a"));
    d.parameters.insert("se_factor".into(), "3".into());
    assert_eq!(a.hash().unwrap(), d.hash().unwrap());
}

#[test]
fn csv_outputs_do_not_depend_on_thread_count() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let m1 = run_with_threads(&small_covariance(d1.path()), Some(1)).unwrap();
    let m2 = run_with_threads(&small_covariance(d2.path()), Some(2)).unwrap();
    assert_eq!(m1.threads, 1);
    assert_eq!(m2.threads, 2);
    let (a, b) = (csv_files(d1.path()), csv_files(d2.path()));
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_eq!(fs::read(d1.path().join(SUMMARY_FILE)).unwrap(), fs::read(d2.path().join(SUMMARY_FILE)).unwrap());
    let hashes = |m: &RunManifest| m.artifacts.iter().map(|x| (x.path.clone(), x.sha256.clone())).collect::<Vec<_>>();
    assert_eq!(hashes(&m1), hashes(&m2));
}

#[test]
fn manifest_is_persisted_and_plot_data_emitted() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_with_threads(&small_covariance(dir.path()), Some(1)).unwrap();
    assert!(m.passed());
    assert!(m.tasks.iter().any(|t| t.name == "runtime"));
    let back = RunManifest::read(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(back.spec_hash, m.spec_hash);
    assert_eq!(back.tasks.len(), m.tasks.len());
    let files = emit_plot_data(&back).unwrap();
    assert!(!files.is_empty());
    let text = fs::read_to_string(&files[0]).unwrap();
    assert_eq!(text.lines().next().unwrap(), "lag,empirical_covariance");
    assert!(text.lines().skip(1).all(|l| l.split(',').count() == 2));
}

#[test]
fn plot_data_from_empty_manifest_is_an_error() {
    let m = RunManifest {
        name: "empty".into(),
        kind: "covariance".into(),
        spec_hash: String::new(),
        code_version: String::new(),
        seeds: vec![],
        threads: 1,
        output_dir: "nowhere".into(),
        status: TaskStatus::Passed,
        tasks: vec![],
        artifacts: vec![],
        wall_seconds: 0.0,
    };
    assert!(matches!(emit_plot_data(&m), Err(HarnessError::IncompleteManifest(_))));
}

#[test]
fn failing_assertion_marks_the_run_failed() {
    let dir = tempfile::tempdir().unwrap();
    let s = spec(ExperimentKind::TreeAlgebraAudit, &[("expected_pairs", "lr:lr"), ("max_leaves", "4")], vec![], dir.path());
    let m = run_with_threads(&s, Some(1)).unwrap();
    assert_eq!(m.status, TaskStatus::Failed);
    assert!(m.failed_assertions().iter().any(|(_, a)| a.name == "regular_set_matches_expected"));
}

#[test]
fn solver_error_yields_task_failure_with_partial_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // epsilon too small for the grid: the mollifier is not resolved
    let s = spec(ExperimentKind::Covariance, &[("target", "ou"), ("epsilon", "0.01")], vec![1], dir.path());
    match run_with_threads(&s, Some(1)) {
        Err(HarnessError::TaskFailure { manifest, .. }) => {
            assert_eq!(manifest.status, TaskStatus::Error);
            assert!(dir.path().join(MANIFEST_FILE).exists());
        }
        other => panic!("expected a task failure, got {other:?}"),
    }
}

#[test]
fn trajectory_persistence_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(16, 1.75).unwrap();
    let cfg = NoiseConfig::new(1.75, 0.125, 3, 1e-3, 0.01);
    let y = sample_y(&cfg, grid).unwrap();
    let path = write_trajectory(dir.path(), "Y", "Y", &y, 0.5, serde_json::json!({"note": 1})).unwrap();
    let (m, back) = read_trajectory(&path).unwrap();
    assert_eq!(m.seed, Some(3));
    assert_eq!(m.config.as_ref(), Some(&cfg));
    assert_eq!(back.times(), y.times());
    for (a, b) in back.fields().iter().zip(y.fields()) {
        assert_eq!(a.max_abs_diff(b), 0.0);
    }
}
