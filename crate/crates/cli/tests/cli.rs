use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aqft_cli::config::{NetConfig, RunConfig, SpacetimeConfig, Suite};
use aqft_cli::report::{RecordEntry, ReportDocument, Status, Summary};
use aqft_cli::{run, CliError};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aqft"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, json).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn unknown_keys_are_rejected() {
    let err = RunConfig::from_json(r#"{"net": {"kind": "spin_chain", "sites": 4, "local_dim": 2}, "tolerence": 1e-9}"#);
    assert!(matches!(err, Err(CliError::Parse(_))));
    let err = RunConfig::from_json(r#"{"net": {"kind": "spin_chain", "sites": 4, "local_dim": 2, "extra": 1}}"#);
    assert!(matches!(err, Err(CliError::Parse(_))));
}

#[test]
fn suites_must_apply_to_the_kind() {
    let err = RunConfig::from_json(r#"{"net": {"kind": "kg_lattice", "time_steps": 6, "sites": 6, "mass": 0.0}, "suites": ["hk"]}"#);
    assert!(matches!(err, Err(CliError::Invalid(_))));
}

#[test]
fn bundled_configs_parse() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        RunConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

#[test]
fn short_chain_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n2.json", r#"{"net": {"kind": "spin_chain", "sites": 2, "local_dim": 2}}"#);
    let out = bin().arg("check").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 3 sites"));
}

#[test]
fn fault_config_exits_one_with_a_named_failure() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("fault.json");
    let out = bin().arg("check").arg(configs().join("fault_injection.json")).arg("--out").arg(&json).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let doc = ReportDocument::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let failed: Vec<&str> = doc.records.iter().filter(|r| r.status == Status::Fail).map(|r| r.name.as_str()).collect();
    assert!(failed.contains(&"squares.left_module"));
    assert!(!failed.contains(&"squares.right_module"));
    assert!(json.with_extension("txt").exists());
    assert!(stdout(&out).contains("FAIL  squares.left_module"));
}

#[test]
fn suite_and_tolerance_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("r.json");
    let out = bin()
        .args(["check", configs().join("fault_injection.json").to_str().unwrap(), "--suite", "validate", "--tol", "1e-6", "--out"])
        .arg(&json)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let doc = ReportDocument::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(doc.tolerance, 1e-6);
    assert!(doc.records.iter().all(|r| r.suite == Suite::Validate));
    assert!(doc.records.iter().any(|r| r.name == "net.composition" && r.status == Status::Fail));
}

#[test]
fn info_lists_circle_regions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c4.json", r#"{"net": {"kind": "spin_chain", "sites": 4, "local_dim": 2}}"#);
    let out = bin().arg("info").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("regions: 13 (1 ambient + 12 arcs)"));
}

#[test]
fn info_with_empty_selection_prints_the_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "e.json", r#"{"net": {"kind": "kg_lattice", "time_steps": 6, "sites": 6, "mass": 0.0}, "suites": []}"#);
    let out = bin().arg("info").arg(&cfg).output().unwrap();
    assert_eq!(stdout(&out).lines().count(), 1);
}

#[test]
fn info_prints_kg_diamond_count() {
    let out = bin().arg("info").arg(configs().join("kg_6x6.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("diamonds: "));
}

#[test]
fn gamma_on_circle_six_is_strictly_smaller() {
    let cfg = RunConfig::load(&configs().join("circle_n6_gamma.json")).unwrap();
    let s = run::gamma_stats(&cfg).unwrap();
    assert!(s.closure < s.squares);
    assert_eq!(s.generators, s.closure);
    let out = bin().arg("gamma").arg(configs().join("circle_n6_gamma.json")).output().unwrap();
    assert!(stdout(&out).contains("closure strictly smaller: yes"));
}

#[test]
fn gamma_on_a_single_region_is_one_identity_square() {
    let cfg = RunConfig {
        net: NetConfig::Custom { spacetime: SpacetimeConfig::Grid { time_steps: 1, sites: 1, periodic: false } },
        suites: None,
        tolerance: None,
        output: None,
        fault: None,
    };
    let s = run::gamma_stats(&cfg).unwrap();
    assert_eq!((s.closure, s.squares), (1, 1));
}

#[test]
fn gamma_statistics_on_a_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        r#"{"net": {"kind": "custom", "spacetime": {"grid": {"time_steps": 2, "sites": 2, "periodic": false}}}}"#,
    );
    let out = bin().arg("gamma").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for key in ["generators: ", "closure: ", "commuting squares: "] {
        assert!(text.contains(key));
    }
}

#[test]
fn gamma_rejects_a_periodic_lattice() {
    let out = bin().arg("gamma").arg(configs().join("kg_6x6.json")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

fn record_strategy() -> impl Strategy<Value = RecordEntry> {
    (
        prop::sample::select(vec![Suite::Validate, Suite::Hk, Suite::Kg, Suite::Gamma]),
        "[a-z_.]{1,20}",
        "[ -~]{0,40}",
        any::<bool>(),
        prop::option::of(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL),
        0usize..100_000,
        prop::option::of("[ -~]{0,40}"),
    )
        .prop_map(|(suite, name, property, pass, residual, checked, witness)| RecordEntry {
            suite,
            name,
            property,
            status: if pass { Status::Pass } else { Status::Fail },
            residual,
            checked,
            witness,
        })
}

proptest! {
    #[test]
    fn report_json_round_trips(records in prop::collection::vec(record_strategy(), 0..8), tol in 1e-15f64..1.0) {
        let cfg = RunConfig {
            net: NetConfig::SpinChain { sites: 4, local_dim: 2, symmetry: None },
            suites: Some(vec![Suite::Validate]),
            tolerance: Some(tol),
            output: None,
            fault: None,
        };
        let doc = ReportDocument::new(cfg, "net".into(), records);
        let back = ReportDocument::from_json(&doc.to_json()).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(doc.summary, Summary::of(&doc.records));
        let any_fail = doc.records.iter().any(|r| r.status == Status::Fail);
        prop_assert_eq!(doc.exit_code(), u8::from(any_fail));
    }
}

#[test]
fn tampered_summary_is_rejected() {
    let cfg = RunConfig::load(&configs().join("circle_n6_gamma.json")).unwrap();
    let mut doc = run::check(&cfg).unwrap();
    doc.summary.passed += 1;
    assert!(ReportDocument::from_json(&doc.to_json()).is_err());
}
