use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL_GRID: &str = r#"
[grid]
res_levels = [0.05, 0.6]
imbalances = [0.1, 0.4]
h_thermal = [2.0]
h_hydro = [1.75]
"#;

fn freqsize(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freqsize"))
        .args(args)
        .output()
        .expect("run freqsize")
}

fn write_config(dir: &Path) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, SMALL_GRID).unwrap();
    path.to_str().unwrap().to_string()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(freqsize(&["--help"]).status.code(), Some(0));
    assert_eq!(freqsize(&["--version"]).status.code(), Some(0));
    assert_eq!(freqsize(&[]).status.code(), Some(1));
    assert_eq!(
        freqsize(&["simulate", "--res", "0.3"]).status.code(),
        Some(1)
    );
}

#[test]
fn simulate_writes_trace_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let o = freqsize(&[
        "simulate",
        "--res",
        "0.6",
        "--imbalance",
        "0.4",
        "--ht",
        "2",
        "--hh",
        "1.75",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let trace = fs::read_to_string(&out).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("t_s,delta_f_hz,p_thermal_pu,p_hydro_pu"));
    assert_eq!(lines.count(), 6001);

    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("trace.metrics.json")).unwrap())
            .unwrap();
    assert_eq!(metrics["scenario_id"], "res0.6-dp0.4-ht2-hh1.75");
    assert!((metrics["h_eq"].as_f64().unwrap() - 0.7625).abs() < 1e-12);
    assert_eq!(metrics["compliance"]["nadir_ok"], false);
}

#[test]
fn simulate_rejects_bad_shares_and_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = freqsize(&[
        "simulate",
        "--res",
        "0.9",
        "--imbalance",
        "0.1",
        "--ht",
        "2",
        "--hh",
        "1.75",
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[system]\nfrequency = 60\n").unwrap();
    let o = freqsize(&["sweep", "--config", s(&bad), "--out-dir", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_size_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let out_dir = dir.path().join("sweep");

    let o = freqsize(&[
        "sweep",
        "--config",
        &cfg,
        "--out-dir",
        s(&out_dir),
        "--workers",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = fs::read_to_string(out_dir.join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 5);
    assert!(rows.lines().next().unwrap().ends_with("status,verified_nadir_hz,verified_rocof_0.5s_hz_per_s,verified_rocof_1s_hz_per_s,verified_rocof_2s_hz_per_s,verified_nadir_ok,verified_rocof_ok,verified_pass"));

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["complete"], true);
    assert_eq!(manifest["rows_written"], 4);
    for f in manifest["files"].as_array().unwrap() {
        assert!(out_dir.join(f.as_str().unwrap()).exists(), "{f}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary.is_object());

    // same config, one worker: identical rows
    let again = dir.path().join("again");
    let o = freqsize(&[
        "sweep",
        "--config",
        &cfg,
        "--out-dir",
        s(&again),
        "--workers",
        "1",
    ]);
    assert!(o.status.success());
    assert_eq!(rows, fs::read_to_string(again.join("rows.csv")).unwrap());

    let sized = dir.path().join("sized.csv");
    let o = freqsize(&["size", "--config", &cfg, "--out", s(&sized)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sized_text = fs::read_to_string(&sized).unwrap();
    assert!(!sized_text.contains("verified_"));

    let verified = dir.path().join("verified.csv");
    let o = freqsize(&[
        "verify",
        "--config",
        &cfg,
        "--rows",
        s(&sized),
        "--out",
        s(&verified),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // re-simulated from 9-digit sized values, so compare all but the last digits
    let verified_text = fs::read_to_string(&verified).unwrap();
    for (a, b) in verified_text.lines().zip(rows.lines()) {
        let (a, b): (Vec<&str>, Vec<&str>) = (a.split(',').collect(), b.split(',').collect());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0), "{x} vs {y}"),
                _ => assert_eq!(x, y),
            }
        }
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("4 pass"));
}

#[test]
fn verify_rejects_unknown_ids_and_empty_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let sized = dir.path().join("sized.csv");
    assert!(freqsize(&["size", "--config", &cfg, "--out", s(&sized)])
        .status
        .success());
    let text = fs::read_to_string(&sized).unwrap();

    let foreign = dir.path().join("foreign.csv");
    fs::write(
        &foreign,
        text.replace("res0.05-dp0.1-ht2-hh1.75", "res0.05-dp0.1-ht9-hh9"),
    )
    .unwrap();
    let out = dir.path().join("v.csv");
    let o = freqsize(&[
        "verify",
        "--config",
        &cfg,
        "--rows",
        s(&foreign),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ht9"));

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, format!("{}\n", text.lines().next().unwrap())).unwrap();
    let o = freqsize(&[
        "verify",
        "--config",
        &cfg,
        "--rows",
        s(&empty),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1));
}
