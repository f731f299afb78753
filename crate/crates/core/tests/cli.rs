use std::process::{Command, Output};

fn be_lab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_be-lab"));
    c.args(args).env_remove("BE_LAB_THREADS").env_remove("BE_LAB_FAULT");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn theorem_json_fields() {
    let out = be_lab(&["theorem", "--d", "3", "--s", "1.0", "--format", "json"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["schema_version"], "be-lab.report/1");
    for key in ["command", "d", "s", "quad_degree", "eps_list", "multistarts", "seed", "format", "output_path"] {
        assert!(v["config"].get(key).is_some(), "config echo lacks {key}");
    }
    let r = &v["result"];
    let gap = r["gap"].as_f64().unwrap();
    assert!((gap - 4.0 / 7.0).abs() < 1e-15);
    for key in ["witness_eps", "quotient", "margin", "c_be_upper_bound"] {
        assert!(r[key].is_number(), "{key}");
    }
    assert!(r["margin"].as_f64().unwrap() > 0.0);
    assert!(r["c_be_upper_bound"].as_f64().unwrap() < gap);
}

#[test]
fn gap_command_equal_to_12_digits() {
    let out = be_lab(&["gap", "--d", "4", "--s", "1.0"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["result"];
    let a = r["spectral_gap"].as_f64().unwrap();
    let b = r["gap_constant"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn sweep_csv_contract() {
    let out = be_lab(&["sweep", "--d", "3", "--s", "1.0", "--eps", "1e-2,5e-3,2.5e-3", "--format", "csv"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eps,numerator,dist2,quotient,quad_err");
    assert_eq!(lines.len(), 4);
    assert!(text.ends_with('\n'));
    for l in &lines[1..] {
        let cells: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 5);
        assert!(cells[3] < 4.0 / 7.0);
        // 17 significant digits
        assert_eq!(l.split(',').next().unwrap().split('e').next().unwrap().replace('.', "").len(), 17);
    }
}

#[test]
fn validation_failures_exit_2() {
    for args in [
        &["constants", "--d", "3", "--s", "1.5"][..],
        &["gap", "--d", "1", "--s", "0.25"][..],
        &["sweep", "--eps", "0"][..],
        &["sweep", "--eps", "0.5"][..],
        &["dist", "--format", "yaml"][..],
        &["nonsense"][..],
    ] {
        let out = be_lab(args, &[]);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = be_lab(&["gap"], &[("BE_LAB_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes_and_fault_injection_fails() {
    let ok = be_lab(&["selftest", "--d", "2", "--s", "0.5"], &[]);
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS ")).count() > 5);
    assert!(!text.contains("FAIL "));

    let bad = be_lab(&["selftest", "--d", "3", "--s", "1.0"], &[("BE_LAB_FAULT", "eigenvalue")]);
    assert_eq!(bad.status.code(), Some(3));
    let text = String::from_utf8(bad.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("FAIL constants.gap_identity")));
    let err = String::from_utf8(bad.stderr).unwrap();
    assert!(err.contains("observed=") && err.contains("expected="));
}

#[test]
fn output_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("be-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("constants.json");
    let p = path.to_str().unwrap();
    let out = be_lab(&["constants", "--d", "2", "--s", "0.5", "--output", p], &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(v["config"]["output_path"], p);
    let sc = v["result"]["sobolev_constant"].as_f64().unwrap();
    assert!((sc - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn byte_identical_across_runs_and_threads() {
    let args = ["sweep", "--d", "2", "--s", "0.5", "--eps", "0.1,0.01", "--seed", "5"];
    let a = be_lab(&args, &[("BE_LAB_THREADS", "1")]);
    let b = be_lab(&args, &[("BE_LAB_THREADS", "3")]);
    let c = be_lab(&args, &[]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn every_command_runs() {
    for cmd in ["constants", "gap", "moments", "dist", "fit", "bound"] {
        let out = be_lab(&[cmd, "--d", "2", "--s", "0.5", "--format", "text"], &[]);
        assert_eq!(out.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stdout.is_empty());
    }
}
