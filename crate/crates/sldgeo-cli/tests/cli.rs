//! End-to-end tests of the binary: exit codes, report determinism, config
//! file merging, and input-error handling.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

static DIR_COUNTER: AtomicU64 = AtomicU64::new(0);

fn scratch_dir(tag: &str) -> PathBuf {
    let id = DIR_COUNTER.fetch_add(1, Ordering::SeqCst);
    let dir = std::env::temp_dir().join(format!(
        "sldgeo-cli-test-{}-{tag}-{id}",
        std::process::id()
    ));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sldgeo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn geodesic_straight_segment_csv() {
    let out = run(&["geodesic", "--r0", "0,0,0", "--u", "0,0,1", "--samples", "101"]);
    assert_eq!(exit_code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "xi,r1,r2,r3");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 101);
    // straight segment: r1 = r2 = 0, r3 = xi
    for row in rows {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[1], 0.0);
        assert_eq!(cols[2], 0.0);
        assert!((cols[3] - cols[0]).abs() < 1e-15);
    }
}

#[test]
fn check_autoparallel_exit_codes_mirror_verdict() {
    let ok = run(&[
        "check-autoparallel",
        "--model",
        "bloch-ellipsoid(c=0.3)",
        "--grid",
        "5",
    ]);
    assert_eq!(exit_code(&ok), 0);
    let body: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(body["verdict"], serde_json::Value::Bool(true));
    assert!(body["certificate"].as_array().unwrap().len() == 2);

    let bad = run(&[
        "check-autoparallel",
        "--model",
        "latitude-band(r=0.7)",
        "--grid",
        "5",
    ]);
    assert_eq!(exit_code(&bad), 1);
    let body: serde_json::Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(body["verdict"], serde_json::Value::Bool(false));
    assert!(body["witness"].is_object());
}

#[test]
fn counterexample_exit_codes() {
    let not_involutive = run(&["counterexample", "--eps", "0.05", "--dim", "3"]);
    assert_eq!(exit_code(&not_involutive), 1);
    let body: serde_json::Value = serde_json::from_slice(&not_involutive.stdout).unwrap();
    assert!(body["residual"].as_f64().unwrap() > 1e-3);

    let trivial = run(&["counterexample", "--eps", "0", "--dim", "3"]);
    assert_eq!(exit_code(&trivial), 0);
}

#[test]
fn input_errors_exit_2() {
    let unknown_model = run(&["check-autoparallel", "--model", "no-such-model"]);
    assert_eq!(exit_code(&unknown_model), 2);

    let bad_tol = run(&[
        "check-autoparallel",
        "--model",
        "bloch-full",
        "--tol",
        "-1",
    ]);
    assert_eq!(exit_code(&bad_tol), 2);

    let missing_seed = run(&["involutivity", "--dim", "2"]);
    assert_eq!(exit_code(&missing_seed), 2);

    let bad_format = run(&[
        "check-autoparallel",
        "--model",
        "bloch-full",
        "--format",
        "csv",
    ]);
    assert_eq!(exit_code(&bad_format), 2);

    // malformed operator JSON
    let dir = scratch_dir("badops");
    let ops = dir.join("ops.json");
    fs::write(&ops, "{ not json").unwrap();
    let bad_ops = run(&[
        "involutivity",
        "--seed",
        "1",
        "--ops",
        ops.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&bad_ops), 2);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = scratch_dir("determinism");
    let out_a = dir.join("sweep_a.csv");
    let out_b = dir.join("sweep_b.csv");
    for out in [&out_a, &out_b] {
        let res = run(&[
            "filtration-sweep",
            "--model",
            "bloch-ellipsoid(c=0.3)",
            "--grid",
            "3",
            "--eps-list",
            "0.2,0.1",
            "--u",
            "1,0.5",
            "--seed",
            "7",
            "--shots",
            "20000",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    }
    let a = fs::read(&out_a).unwrap();
    let b = fs::read(&out_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "report bodies must be byte-identical for a fixed seed");

    // timestamps live in the sidecar, not the body
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("sweep_a.csv.meta.json")).unwrap())
            .unwrap();
    assert!(meta["timestamp_unix_ms"].as_u64().is_some());
    assert_eq!(meta["config"]["seed"], serde_json::json!(7));
    assert_eq!(meta["library_version"].as_str().unwrap(), env!("CARGO_PKG_VERSION"));
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn involutivity_seed_changes_sample_but_not_verdict() {
    let a = run(&["involutivity", "--dim", "2", "--states", "15", "--seed", "3"]);
    let b = run(&["involutivity", "--dim", "2", "--states", "15", "--seed", "4"]);
    assert_eq!(exit_code(&a), 0);
    assert_eq!(exit_code(&b), 0);
    let va: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let vb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    assert_ne!(va["worst_residual"], vb["worst_residual"]);
    assert_eq!(va["involutive"], vb["involutive"]);
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = scratch_dir("config");
    let config = dir.join("run.json");
    fs::write(
        &config,
        r#"{"model": "bloch-ellipsoid(c=0.3)", "grid": 4, "tol": 1e-8}"#,
    )
    .unwrap();
    let from_config = run(&[
        "check-autoparallel",
        "--config",
        config.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&from_config), 0);
    let body: serde_json::Value = serde_json::from_slice(&from_config.stdout).unwrap();
    assert_eq!(body["grid_points"], serde_json::json!(16));

    // flag wins over the config value
    let overridden = run(&[
        "check-autoparallel",
        "--config",
        config.to_str().unwrap(),
        "--grid",
        "3",
    ]);
    let body: serde_json::Value = serde_json::from_slice(&overridden.stdout).unwrap();
    assert_eq!(body["grid_points"], serde_json::json!(9));

    let unreadable = run(&["check-autoparallel", "--config", "/no/such/file.json"]);
    assert_eq!(exit_code(&unreadable), 2);
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn surface_and_iid_dump_shapes() {
    let surf = run(&["surface", "--c", "0.3", "--grid", "5"]);
    assert_eq!(exit_code(&surf), 0);
    let text = String::from_utf8(surf.stdout).unwrap();
    assert!(text.starts_with("xi1,xi2,r1,r2,r3\n"));
    assert_eq!(text.lines().count(), 26);

    let dump = run(&[
        "iid-extend",
        "--model",
        "bloch-geodesic(a=0.1,c=0.3)",
        "--copies",
        "2",
        "--grid",
        "3",
    ]);
    assert_eq!(exit_code(&dump), 0);
    let text = String::from_utf8(dump.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in lines {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(record["state"]["dim"], serde_json::json!(4));
        assert!(record["fisher_scaling_gap"].as_f64().unwrap() < 1e-9);
        assert!(record["slds"].as_array().unwrap().len() == 1);
    }
}

#[test]
fn scalar_estimate_reports_bound() {
    let out = run(&[
        "scalar-estimate",
        "--model",
        "bloch-full",
        "--xi",
        "0,0,0",
        "--coeffs",
        "1,0,0",
    ]);
    assert_eq!(exit_code(&out), 0);
    let body: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let var = body["variance"].as_f64().unwrap();
    let bound = body["scalar_cr_bound"].as_f64().unwrap();
    assert!((var - 1.0).abs() < 1e-9);
    assert!((var - bound).abs() < 1e-9);
    // the observable is sigma_x
    assert_eq!(body["observable"]["dim"], serde_json::json!(2));
    let re = body["observable"]["re"].as_array().unwrap();
    assert!((re[0][1].as_f64().unwrap() - 1.0).abs() < 1e-9);
}
