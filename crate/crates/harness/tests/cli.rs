use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn singhyp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singhyp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

#[test]
fn ulam_on_doubling_is_lebesgue() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"ulam\"\n[map]\nfamily = \"doubling\"\n[ulam]\nbins = 1024\n",
    );
    let out = dir.path().join("out");
    let o = singhyp(&["ulam", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("ulam.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bin_left,density"));
    let mut n = 0;
    for line in lines {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() <= 1e-10, "{line}");
        n += 1;
    }
    assert_eq!(n, 1024);

    let summary = json(&out.join("summary.json"));
    assert!(summary["residual"].as_f64().unwrap() < 1e-10);
    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["status"], "ok");
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert!(manifest["versions"]["singhyp-core"].is_string());
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn malformed_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[map]\nfamily = \"doubling\"\n[ulam]\nbins = 64\nbogus_knob = 2\n",
    );
    let o = singhyp(&[
        "ulam",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bogus_knob"), "{err}");
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&singhyp(&["ulam"])), 1);
    assert_eq!(code(&singhyp(&["nonsense", "--config", "x.toml"])), 1);
    assert_eq!(code(&singhyp(&["acceptance", "nonsense"])), 1);
    assert_eq!(code(&singhyp(&[])), 1);

    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "experiment = \"dimension\"\n[map]\nfamily = \"tent\"\n",
    );
    assert_eq!(code(&singhyp(&["ulam", "--config", &cfg])), 1);
}

#[test]
fn dimension_on_affine_skew() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[map]\nfamily = \"affine-skew\"\ncontraction = 0.3333333333333333\n\
         [dimension]\nlength = 2000000\ncount = 8\n",
    );
    let out = dir.path().join("out");
    let o = singhyp(&[
        "dimension",
        "--config",
        &cfg,
        "--seed",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("summary.json"));
    let exact = 1.0 + 2f64.ln() / 3f64.ln();
    let slope = s["slope"].as_f64().unwrap();
    assert!((slope - exact).abs() < 0.15, "slope {slope}");
    assert!((s["formula"].as_f64().unwrap() - exact).abs() < 1e-3);
    assert_eq!(json(&out.join("manifest.json"))["seed"], 4);
}

#[test]
fn csv_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[map]\nfamily = \"lorenz\"\n[correlations]\nlength = 200000\nmax_lag = 20\n",
    );
    let mut tables = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(format!("w{workers}"));
        let o = singhyp(&[
            "correlations",
            "--config",
            &cfg,
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        tables.push(fs::read(out.join("correlations.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn core_failure_exits_two_and_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[map]\nfamily = \"doubling\"\n[loglaw-map]\ntarget = [0.3, 0.0]\nr_max = 0.001\nhorizon = 1\n",
    );
    let out = dir.path().join("out");
    let o = singhyp(&[
        "loglaw-map",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["status"], "violation");
    assert!(m["error"].as_str().unwrap().contains("dropped"));
}

#[test]
fn norms_audit_on_lorenz_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[map]\nfamily = \"lorenz\"\n[norms-audit]\ngrid = 256\n",
    );
    let out = dir.path().join("out");
    let o = singhyp(&[
        "norms-audit",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("norms-audit.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn acceptance_verdicts_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut verdicts = Vec::new();
    for (run, workers) in [("a", "1"), ("b", "2")] {
        let out = dir.path().join(run);
        let o = singhyp(&[
            "acceptance",
            "w1",
            "--seed",
            "1",
            "--workers",
            workers,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
        verdicts.push(fs::read(out.join("verdict.json")).unwrap());
        assert!(out.join("w1/w1_metric.csv").exists());
    }
    assert_eq!(verdicts[0], verdicts[1]);
}
