use std::path::Path;
use std::process::{Command, Output};

use loadfc::hierarchy::{HierarchyStructure, DEFAULT_SCALES};
use loadfc::io::{read_forecast, write_forecast};
use loadfc::series::DistForecast;
use loadfc::{TimeIndex, TimePoint};

fn loadfc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loadfc")).args(args).env_remove("LOADFC_OUT_DIR").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn assert_one_line_error(o: &Output, kind: &str) {
    assert!(!o.status.success());
    let err = stderr(o);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with(&format!("error[{kind}]: ")), "{err}");
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("c.toml");
    std::fs::write(&p, "[synth]\nyears = 2\n").unwrap();
    p
}

#[test]
fn synth_is_deterministic_per_seed() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path());
    let (a, b, c) = (d.path().join("a"), d.path().join("b"), d.path().join("c"));
    for (out, seed) in [(&a, "4"), (&b, "4"), (&c, "5")] {
        let o = loadfc(&["synth", "--config", s(&cfg), "--seed", seed, "--out", s(out)]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |dir: &Path| std::fs::read(dir.join("train.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let header = std::fs::read_to_string(a.join("future.csv")).unwrap();
    assert!(header.starts_with("timestamp,load,T1,"));
}

#[test]
fn ldc_names_the_load_column() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path());
    let o = loadfc(&["synth", "--config", s(&cfg), "--ldc", "ldc1", "--out", s(d.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(d.path().join("train.csv")).unwrap();
    assert!(text.starts_with("timestamp,ldc1,"));
}

#[test]
fn out_dir_from_environment() {
    let d = tempfile::tempdir().unwrap();
    let cfg = small_config(d.path());
    let out = d.path().join("env_out");
    let o = Command::new(env!("CARGO_BIN_EXE_loadfc"))
        .args(["synth", "--config", s(&cfg)])
        .env("LOADFC_OUT_DIR", &out)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("holidays.csv").is_file());
}

fn forecast_file(path: &Path, step: u32, len: usize, level: f64) {
    let index = TimeIndex::new(TimePoint::new(2022, 3, 1, 1).unwrap(), step, len).unwrap();
    let mean: Vec<f64> = (0..len).map(|i| level * f64::from(step) * (1.0 + 0.3 * (i as f64 * 0.7).sin())).collect();
    let sd: Vec<f64> = (0..len).map(|i| f64::from(step).sqrt() * (5.0 + (i % 3) as f64)).collect();
    write_forecast(path, &DistForecast::new(index, mean, sd).unwrap()).unwrap();
}

#[test]
fn score_of_identical_files_is_perfect() {
    let d = tempfile::tempdir().unwrap();
    let f = d.path().join("f.csv");
    forecast_file(&f, 1, 48, 900.0);
    let o = loadfc(&["score", "--forecast", s(&f), "--actual", s(&f), "--out", s(d.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("scores.json")).unwrap()).unwrap();
    for m in ["mape_h", "magnitude", "timing_qual", "timing_final", "shape"] {
        assert_eq!(json[m].as_f64(), Some(0.0), "{m}");
    }
    assert_eq!(json["coverage_pct"].as_f64(), Some(100.0));
    let csv = std::fs::read_to_string(d.path().join("scores.csv")).unwrap();
    assert!(csv.starts_with("mape_h,magnitude,"));
}

#[test]
fn reconcile_output_is_coherent() {
    let d = tempfile::tempdir().unwrap();
    let days = 3;
    for (j, &k) in DEFAULT_SCALES.iter().enumerate() {
        forecast_file(&d.path().join(format!("forecasts_k{k}.csv")), k as u32, days * 24 / k, 1000.0 + 10.0 * j as f64);
    }
    let out = d.path().join("rec");
    let o = loadfc(&["reconcile", "--input", s(d.path()), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bottom = read_forecast::<f64>(&out.join("reconciled.csv")).unwrap();
    assert_eq!(bottom.mean.len(), days * 24);
    let hs = HierarchyStructure::new(&DEFAULT_SCALES).unwrap();
    for &k in DEFAULT_SCALES.iter().filter(|&&k| k != 1) {
        let agg = read_forecast::<f64>(&out.join(format!("reconciled_k{k}.csv"))).unwrap();
        for (i, v) in agg.mean.iter().enumerate() {
            let sum: f64 = bottom.mean[i * k..(i + 1) * k].iter().sum();
            assert!((sum - v).abs() <= 1e-9 * v.abs(), "scale {k} block {i}: {sum} vs {v}");
        }
    }
    let report = std::fs::read_to_string(out.join("reconcile_report.csv")).unwrap();
    assert_eq!(report.lines().count(), 1 + days * hs.n_nodes());
    let peaks = std::fs::read_to_string(out.join("reconciled_peaks.csv")).unwrap();
    assert_eq!(peaks.lines().count(), 1 + days);
}

#[test]
fn reconcile_without_all_scales_fails() {
    let d = tempfile::tempdir().unwrap();
    forecast_file(&d.path().join("forecasts_k1.csv"), 1, 24, 1000.0);
    let o = loadfc(&["reconcile", "--input", s(d.path()), "--out", s(d.path())]);
    assert_one_line_error(&o, "usage");
    assert!(stderr(&o).contains("forecasts_k12.csv"));
}

#[test]
fn errors_are_single_line_and_typed() {
    let d = tempfile::tempdir().unwrap();
    let o = loadfc(&["score", "--forecast", "/nonexistent/f.csv", "--actual", "x.csv", "--out", s(d.path())]);
    assert_one_line_error(&o, "usage");

    let bad = d.path().join("bad.toml");
    std::fs::write(&bad, "[pipeline]\noutlier_quantile = 2.0\n").unwrap();
    let o = loadfc(&["synth", "--config", s(&bad), "--out", s(d.path())]);
    assert_one_line_error(&o, "config");

    let csv = d.path().join("dup.csv");
    std::fs::write(&csv, "timestamp,load,T1\n2022-01-01T00:00:00,1,2\n2022-01-01T00:00:00,1,2\n").unwrap();
    let o = loadfc(&["select-features", "--train", s(&csv), "--out", s(d.path())]);
    assert_one_line_error(&o, "parse");
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));

    let o = loadfc(&["forecast", "--train"]);
    assert_one_line_error(&o, "usage");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_exits_cleanly() {
    let o = loadfc(&["--help"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("select-features"));
}
