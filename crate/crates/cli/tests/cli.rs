use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tfdw(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tfdw"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const SMALL_SUITES: [&str; 6] = [
    "--lp-instances",
    "2000",
    "--hls-instances",
    "2000",
    "--truncation-instances",
    "200",
];

#[test]
fn verify_lemmas_passes_under_both_kernels() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in ["euclidean", "graph"] {
        let dir = tmp.path().join(kind);
        let mut args = vec!["verify-lemmas", "--kind", kind];
        args.extend(SMALL_SUITES);
        let o = tfdw(&args, &dir);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let csv = read(&dir, "lemmas.csv");
        assert!(csv.starts_with("check,instances,violations,max_ratio,seed\n"));
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.contains(&format!("hls_{kind},2000,0,")));
    }
}

#[test]
fn injected_ball_fault_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let mut args = vec!["verify-lemmas", "--ball-fault", "1"];
    args.extend(SMALL_SUITES);
    let o = tfdw(&args, tmp.path());
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("ball_formula: 30 violations"), "{err}");
    assert!(err.contains("R=1: |B_R|=7 vs formula 8"), "{err}");
}

#[test]
fn psi_decay_table_and_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tfdw(&["psi-decay", "--n-max", "100", "--mass", "10"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = read(tmp.path(), "psi_decay.csv");
    assert_eq!(csv.lines().count(), 101);
    let last: Vec<f64> = csv
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|t| t.parse().unwrap())
        .collect();
    assert!(last[5] < 2.32, "total at n = 100 is {}", last[5]);
    assert!(read(tmp.path(), "psi_decay.svg").starts_with("<svg"));

    let short = tmp.path().join("short");
    let o = tfdw(&["psi-decay", "--n-max", "2"], &short);
    assert_eq!(code(&o), 0);
    assert_eq!(read(&short, "psi_decay.csv").lines().count(), 3);

    for bad in [["--mass", "0"], ["--n-max", "1"]] {
        let o = tfdw(&["psi-decay", bad[0], bad[1]], &tmp.path().join("bad"));
        assert_eq!(code(&o), 2);
    }
}

#[test]
fn tfdw_run_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tfdw(&["tfdw", "--mass", "0.5", "--box", "12"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in [
        "trajectory.csv",
        "field.txt",
        "mass_profile.csv",
        "mass_growth.csv",
        "summary.json",
        "manifest.json",
    ] {
        assert!(tmp.path().join(name).exists(), "{name}");
    }
    let summary: Value = serde_json::from_str(&read(tmp.path(), "summary.json")).unwrap();
    assert_eq!(summary["termination"], "CONVERGED");
    assert!(summary["residual"].as_f64().unwrap() <= 1e-6);
    assert!(read(tmp.path(), "field.txt").starts_with("TFDW-FIELD 1\n"));
}

#[test]
fn tfdw_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tfdw(&["tfdw", "--box", "5"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Usage: tfdw tfdw"));
    let o = tfdw(
        &["tfdw", "--mass", "1", "--box", "5", "--init", "sphere"],
        tmp.path(),
    );
    assert_eq!(code(&o), 2);
    let o = tfdw(&["tfdw", "--mass", "-1", "--box", "5"], tmp.path());
    assert_eq!(code(&o), 2);
    let o = tfdw(&["tfdw", "--mass", "1", "--kind", "manhattan"], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn unconverged_run_is_a_numerical_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tfdw(
        &["tfdw", "--mass", "1", "--box", "5", "--max-iters", "3"],
        tmp.path(),
    );
    assert_eq!(code(&o), 3);
    assert!(tmp.path().join("trajectory.csv").exists());
}

#[test]
fn manifest_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let o = tfdw(
        &[
            "tfdw", "--mass", "1.5", "--box", "5", "--init", "random", "--seed", "9",
        ],
        &first,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest = first.join("manifest.json");
    let m: Value = serde_json::from_str(&read(&first, "manifest.json")).unwrap();
    assert_eq!(m["command"], "tfdw");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));

    let second = tmp.path().join("second");
    let o = tfdw(&["tfdw", "--config", manifest.to_str().unwrap()], &second);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for name in [
        "trajectory.csv",
        "mass_profile.csv",
        "field.txt",
        "manifest.json",
    ] {
        assert_eq!(read(&first, name), read(&second, name), "{name}");
    }

    let o = tfdw(
        &["drop", "--config", manifest.to_str().unwrap()],
        &tmp.path().join("wrong"),
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("drop.json");
    fs::write(&cfg, r#"{"volume": 4, "kind": "graph", "schedule": {"type": "greedy", "restarts": 2, "seed": 3}}"#).unwrap();
    let out = tmp.path().join("run");
    let o = tfdw(
        &["drop", "--config", cfg.to_str().unwrap(), "--volume", "6"],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: Value = serde_json::from_str(&read(&out, "manifest.json")).unwrap();
    assert_eq!(m["config"]["volume"], 6);
    assert_eq!(m["config"]["kind"], "graph");
    assert_eq!(m["config"]["schedule"]["type"], "greedy");
    assert_eq!(m["seed"], 3);
}

#[test]
fn drop_matches_enumeration_and_rejects_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tfdw(&["drop", "--volume", "5", "--seed", "2"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let e: Value = serde_json::from_str(&read(tmp.path(), "energy.json")).unwrap();
    let total = e["energy"]["total"].as_f64().unwrap();
    assert!((total - e["enumerated_optimum"].as_f64().unwrap()).abs() < 1e-9);
    assert!((total - (5.0 + 77.0 / 6.0)).abs() < 1e-9);
    assert!(read(tmp.path(), "drop.txt").starts_with("TFDW-DROP 1\n"));

    let o = tfdw(&["drop", "--volume", "0"], &tmp.path().join("zero"));
    assert_eq!(code(&o), 2);
    let o = tfdw(&["drop"], &tmp.path().join("none"));
    assert_eq!(code(&o), 2);
}

#[test]
fn drop_scaling_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = tfdw(
            &[
                "drop-scaling",
                "--volumes",
                "16,32,64,128,256,512",
                "--slack",
                "0.5",
            ],
            dir,
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for name in ["drop_scaling.csv", "drop_subadditivity.csv", "drop_512.txt"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
    let csv = read(&a, "drop_scaling.csv");
    assert_eq!(csv.lines().count(), 7);
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.ends_with(",true,") || l.contains(",true,")));
    assert!(read(&a, "drop_subadditivity.csv")
        .lines()
        .skip(1)
        .all(|l| l.ends_with(",true")));
    assert!(read(&a, "drop_scaling.svg").starts_with("<svg"));
}

#[test]
fn tfdw_scan_writes_both_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let o = tfdw(
        &[
            "tfdw-scan",
            "--masses",
            "0.5..4:2",
            "--splits",
            "0.25,0.5",
            "--box",
            "4",
            "--separation",
            "10",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let split = read(tmp.path(), "splitting.csv");
    assert!(split.starts_with("m,separation,e_single,e_split_best,best_m1,advantage_indicator\n"));
    assert_eq!(split.lines().count(), 3);
    assert_eq!(read(tmp.path(), "subadditivity.csv").lines().count(), 5);
    assert!(read(tmp.path(), "splitting.svg").starts_with("<svg"));
    let o = tfdw(&["tfdw-scan", "--masses", "abc"], &tmp.path().join("bad"));
    assert_eq!(code(&o), 2);
}
