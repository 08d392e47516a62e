use std::path::Path;
use std::process::Command;
use vhj::io::{read_field, read_manifest, read_table, MANIFEST};

fn vhj(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_vhj")).args(args).output().unwrap()
}

fn table(path: &Path) -> vhj::io::Table {
    read_table(std::io::BufReader::new(std::fs::File::open(path).unwrap())).unwrap()
}

#[test]
fn solve_constant_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# constant data stay put\ninit.kind = constant\ninit.c = 2.5\ngrid.cells = 64\n").unwrap();
    let out = dir.path().join("out");
    let res = vhj(&["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let manifest = read_manifest(out.join(MANIFEST)).unwrap();
    let snapshots: Vec<_> = manifest.iter().filter(|e| e.file.starts_with("snapshot_")).collect();
    assert_eq!(snapshots.len(), 3);
    for e in snapshots {
        let f = read_field(std::io::BufReader::new(std::fs::File::open(out.join(&e.file)).unwrap())).unwrap();
        assert!(f.field.values().iter().all(|&u| u == 2.5));
    }
    let meta = table(&out.join("run_meta.csv"));
    assert_eq!(meta.floats("floor_events").unwrap(), vec![0.0]);
    assert!(out.join("defaults.cfg").exists());
}

#[test]
fn check_gradient_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = vhj(&["check", "--estimate", "universal_gradient", "--grid", "200", "--quiet", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0));
    assert!(res.stdout.is_empty());
    let report = table(&out.join("report.csv"));
    assert_eq!(report.header, ["estimate_id", "t", "ball", "measured", "bound_functional", "ratio"]);
    let tol = 10.0 * (8.0f64 / 200.0).sqrt();
    assert!(report.floats("ratio").unwrap().iter().all(|&r| r <= 1.0 + tol));
    let summary = table(&out.join("summary.csv"));
    assert_eq!(summary.header, ["estimate_id", "C_emp", "C_emp_refined", "drift", "verdict"]);
    assert_eq!(summary.rows[0][4], "pass");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "problem.qq = 2\n").unwrap();
    let res = vhj(&["solve", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("problem.qq"));
    // too coarse for the accuracy target: a verdict failure, not an error
    let res = vhj(&["oracle-q2", "--grid", "64", "--out", out]);
    assert_eq!(res.status.code(), Some(2));
    let res = vhj(&["vss-limit", "--q", "1.6", "--out", out]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(vhj(&["--help"]).status.code(), Some(0));
    assert_eq!(vhj(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn profile_and_experiment_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nonuniq");
    assert_eq!(vhj(&["profile-nonuniq", "--quiet", "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let profile = table(&out.join("profile.csv"));
    assert_eq!(profile.header, ["eta", "f", "fp"]);
    for key in ["q", "N", "a", "f0", "c_inf", "class"] {
        assert!(profile.meta.contains_key(key), "{key}");
    }
    let f = profile.floats("f").unwrap();
    assert!(f.windows(2).all(|w| w[1] > w[0]));

    let out = dir.path().join("super");
    assert_eq!(vhj(&["supersolution", "--quiet", "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let dump = table(&out.join("supersolution.csv"));
    assert_eq!(dump.header, ["r", "phi1", "Phi", "residual"]);
    for key in ["lambda1", "K", "m_K", "h"] {
        assert!(dump.meta.contains_key(key), "{key}");
    }
    let res = table(&out.join("supersolution_residual.csv"));
    let tol = res.floats("tolerance").unwrap()[0];
    assert!(res.floats("min_residual").unwrap().iter().all(|&m| m >= -tol));

    let out = dir.path().join("rates");
    assert_eq!(vhj(&["rates", "--grid", "400", "--quiet", "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let rates = table(&out.join("rates.csv"));
    assert_eq!(
        rates.header,
        ["experiment", "q", "N", "R", "delta", "slope_measured", "slope_bound_first", "slope_bound_second", "determination", "verdict"]
    );
    let samples = table(&out.join("rate_samples.csv"));
    assert_eq!(samples.meta_float("R").unwrap(), rates.floats("R").unwrap()[0]);
}

#[test]
fn identical_configs_give_identical_digests() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        assert_eq!(vhj(&["vss-limit", "--grid", "200", "--quiet", "--out", out.to_str().unwrap()]).status.code(), Some(0));
        read_manifest(out.join(MANIFEST)).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    assert_eq!(vhj::io::manifest_digests(&a), vhj::io::manifest_digests(&b));
    let bytes = |name: &str| std::fs::read(dir.path().join(name).join("vss_limit.csv")).unwrap();
    assert_eq!(bytes("a"), bytes("b"));
}
