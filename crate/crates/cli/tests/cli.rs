mod common;

use std::fs;
use std::path::Path;

use common::{fracspec, stdout_ok, Table};

fn stderr_json(args: &[&str]) -> (i32, serde_json::Value) {
    let out = fracspec(args, None);
    let code = out.status.code().unwrap();
    let err = String::from_utf8(out.stderr).unwrap();
    (code, serde_json::from_str(err.trim()).unwrap_or_else(|_| panic!("not JSON: {err}")))
}

#[test]
fn no_arguments_prints_usage() {
    let out = fracspec(&[], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_preset_is_a_config_error() {
    let (code, v) = stderr_json(&["run-preset", "bogus"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "config");
    assert!(v["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn stochastic_commands_need_a_seed() {
    let (code, v) = stderr_json(&["sample", "--hurst", "0.75", "--paths", "1"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "config");
}

#[test]
fn invalid_parameter_maps_to_exit_two() {
    let (code, v) = stderr_json(&["filter", "--h1", "1.5", "--h2", "0.5"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "config");
}

#[test]
fn numerical_failure_maps_to_exit_three() {
    // Tail mass of 10 eigenvalues exceeds the budget at small eps.
    let (code, v) = stderr_json(&["smallball", "--hurst", "0.5", "--terms", "10", "--eps", "0.5,0.4,0.3,0.2"]);
    assert_eq!(code, 3, "{v}");
    assert_eq!(v["error"], "numerical");
}

#[test]
fn missing_config_file_is_io_error() {
    let (code, v) = stderr_json(&["run", "/nonexistent/fracspec.json"]);
    assert_eq!(code, 1);
    assert_eq!(v["error"], "io");
}

#[test]
fn config_files_reject_unknown_keys() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR"));
    let good = stdout_ok(&["preset", "kalman-bucy-identity"], None);
    let path = dir.join("kalman-bucy.json");
    fs::write(&path, &good).unwrap();
    let a = stdout_ok(&["run", path.to_str().unwrap()], None);
    let b = stdout_ok(&["run-preset", "kalman-bucy-identity"], None);
    assert_eq!(a, b);

    let bad = good.replacen("\"horizon\"", "\"gain\": 2.0, \"horizon\"", 1);
    let path = dir.join("kalman-bucy-bad.json");
    fs::write(&path, bad).unwrap();
    let (code, v) = stderr_json(&["run", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(v["message"].as_str().unwrap().contains("gain"));
}

#[test]
fn csv_header_carries_config_and_tolerance() {
    let csv = stdout_ok(&["hilbert", "--kernel", "zero", "--nu-min", "1", "--nu-max", "10"], None);
    let t = Table::parse(&csv);
    assert!(t.comments[0].starts_with("fracspec "));
    let cfg = t.comments[1].strip_prefix("config: ").unwrap();
    let v: serde_json::Value = serde_json::from_str(cfg).unwrap();
    assert_eq!(v["command"]["subcommand"], "hilbert");
    assert!(t.tolerance() > 0.0);
    assert_eq!(t.header, ["nu_root", "residual", "prediction", "gap"]);
    assert_eq!(t.rows.len(), 3);
}

#[test]
fn output_flag_writes_file() {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("presets.txt");
    let out = fracspec(&["run-preset", "kalman-bucy-identity", "-o", path.to_str().unwrap()], None);
    assert!(out.status.success() && out.stdout.is_empty());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("quantity,value"));
}

#[test]
fn galerkin_cache_round_trip() {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cache-round-trip");
    let _ = fs::remove_dir_all(&dir);
    let args = ["eigen", "--hurst", "0.7", "--grid", "120", "--count", "10"];
    let cold = stdout_ok(&args, Some(&dir));
    let files: Vec<_> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 2, "{files:?}");
    assert!(files.iter().all(|p| p.extension().is_some_and(|e| e == "bin")));
    let warm = stdout_ok(&args, Some(&dir));
    assert_eq!(cold, warm);
    assert_eq!(cold, stdout_ok(&args, None));

    // A corrupted entry is recomputed rather than trusted.
    fs::write(&files[0], b"junk").unwrap();
    assert_eq!(cold, stdout_ok(&args, Some(&dir)));
}

#[test]
fn presets_listing_and_json_output() {
    let names = stdout_ok(&["presets"], None);
    assert!(names.lines().any(|l| l == "hilbert-synthetic"));
    let doc: serde_json::Value =
        serde_json::from_str(&stdout_ok(&["run-preset", "lambda-zeros", "--format", "json"], None)).unwrap();
    assert_eq!(doc["result"]["winding"], 1.0);
    assert_eq!(doc["config"]["command"]["subcommand"], "filter");
}
