use std::path::Path;
use std::process::{Command, Output};

use ctmc_sens::estimators::report::Report;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ctmc-sens"));
    for (k, _) in std::env::vars() {
        if k.starts_with("CTMC_SENS_") {
            c.env_remove(k);
        }
    }
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn birth_death_pathwise_covers_closed_form() {
    let out = run(&[
        "run",
        "--model",
        "birth-death",
        "--method",
        "gs_pathwise",
        "--param",
        "2",
        "--species",
        "A",
        "--time",
        "5",
        "--paths",
        "10000",
        "--no-timing",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&out);
    assert_eq!(r.len(), 1);
    let (est, hw): (f64, f64) = (r[0][2].parse().unwrap(), r[0][3].parse().unwrap());
    assert!((est + 28.508100).abs() <= hw, "{est} +- {hw}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{\n  \"model\": \"switch\",\n  \"method\": \"lr\",\n  \"oops\": 1\n}");
    let out = run(&["run", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"), "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&[
        "run",
        "--model",
        "switch",
        "--method",
        "gs_hybrid",
        "--exempt",
        "1,3",
        "--species",
        "C",
        "--time",
        "1",
        "--paths",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = run(&[
        "run",
        "--model",
        "birth-death",
        "--method",
        "lr",
        "--species",
        "A",
        "--time",
        "50",
        "--paths",
        "10",
        "--max-jumps",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(4));

    let tiny = write(
        dir.path(),
        "tiny.json",
        r#"{"model": "birth-death", "method": "oracle", "params": [2],
            "functional": {"terminal": {"observable": {"species": "A"}, "time": 5.0}},
            "cme": {"upper": {"A": 8}}}"#,
    );
    let out = run(&["run", "--config", &tiny]);
    assert_eq!(out.status.code(), Some(5), "{}", String::from_utf8_lossy(&out.stderr));

    let out =
        run(&["run", "--model", "nonexistent.json", "--method", "lr", "--species", "A", "--time", "1", "--paths", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_config_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("first");
    let out = run(&[
        "run",
        "--model",
        "switch",
        "--method",
        "rpd_hybrid",
        "--window",
        "0.2",
        "--species",
        "C",
        "--time",
        "2",
        "--paths",
        "3000",
        "--seed",
        "11",
        "--out",
        prefix.to_str().unwrap(),
        "--dump-paths",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first: Report = serde_json::from_str(&std::fs::read_to_string(dir.path().join("first.json")).unwrap()).unwrap();
    assert!(dir.path().join("first.csv").exists());
    let path = std::fs::read_to_string(dir.path().join("first.path1.csv")).unwrap();
    assert!(path.starts_with("time,A,B,C,channel"));
    assert_eq!(first.provenance["seed"], 11);

    let mut cfg = first.provenance["config"].clone();
    cfg["out"] = serde_json::Value::String(dir.path().join("second").to_str().unwrap().into());
    cfg.as_object_mut().unwrap().remove("dump_paths");
    let cfg_path = write(dir.path(), "again.json", &cfg.to_string());
    let out = run(&["run", "--config", &cfg_path, "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let second: Report =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("second.json")).unwrap()).unwrap();
    assert_eq!(first.rows.len(), second.rows.len());
    for (a, b) in first.rows.iter().zip(&second.rows) {
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.halfwidth.to_bits(), b.halfwidth.to_bits());
        assert_eq!((a.n_pathwise, a.n_coupled), (b.n_pathwise, b.n_coupled));
    }
}

#[test]
fn environment_overrides() {
    let args = ["run", "--model", "switch", "--method", "lr_cv", "--species", "C", "--time", "1", "--paths", "200"];
    let a = bin().args(args).env("CTMC_SENS_SEED", "5").output().unwrap();
    let b = bin().args(args).arg("--seed").arg("5").output().unwrap();
    let c = bin().args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(rows(&a)[0][2], rows(&b)[0][2]);
    assert_ne!(rows(&a)[0][2], rows(&c)[0][2]);
}

#[test]
fn flux_gradient_has_all_components() {
    let out = run(&[
        "run",
        "--model",
        "dimerization-flux",
        "--method",
        "lr_cv",
        "--flux",
        "3",
        "--time",
        "0.5",
        "--paths",
        "200",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&out);
    assert_eq!(r.iter().map(|x| x[1].as_str()).collect::<Vec<_>>(), ["1", "2", "3", "4", "5", "6"]);
}

#[test]
fn check_and_models() {
    let out = run(&["check", "--model", "switch"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("non-interruptive: true"));
    let out = run(&["check", "--model", "switch", "--exempt", "1,3"]);
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["models"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("dimerization-flux"));
}

#[test]
fn reproduce_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["reproduce", "fig1", "--scale", "0.05", "--out", dir.path().to_str().unwrap(), "--workers", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("fig1.csv")).unwrap();
    assert!(csv.lines().count() > 20);
    let out = run(&["reproduce", "fig7"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let cfg = ctmc_sens_cli::ExperimentConfig::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap();
        cfg.resolve().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        n += 1;
    }
    assert!(n >= 5);
}

#[test]
fn fuzz_seeds_parse_without_panicking() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    for entry in std::fs::read_dir(root.join("model_config")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        if let Ok(m) = ctmc_sens::model::Model::from_json(&text) {
            assert_eq!(ctmc_sens::model::Model::from_json(&m.config.to_json()).unwrap(), m);
        }
    }
    for entry in std::fs::read_dir(root.join("experiment_config")).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        if let Ok(cfg) = ctmc_sens_cli::ExperimentConfig::from_json(&text) {
            let _ = cfg.resolve();
        }
    }
}
