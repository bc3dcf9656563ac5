use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spiked-wigner"));
    c.args(args).env_remove("SPIKED_WIGNER_SEED");
    if let Some(s) = env_seed {
        c.env("SPIKED_WIGNER_SEED", s);
    }
    c.output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn theory_reports_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"law":{"kind":"gaussian","sigma2":1.0},"theta":2.0}"#);
    let o = run(&["theory", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["prediction"]["rho"], 2.5);
    assert_eq!(v["prediction"]["tau"], 0.75);
    assert!((v["prediction"]["varZ"].as_f64().unwrap() - 39.0 / 128.0).abs() < 1e-12);
    assert!(v["subordination_residual"].as_f64().unwrap() < 1e-7);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let crit = write(dir.path(), "c.json", r#"{"law":{"kind":"gaussian","sigma2":1.0},"theta":1.0}"#);
    let o = run(&["theory", "--config", &crit], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no outlier"));
    let bad = write(dir.path(), "b.json", "{\"law\": 3}");
    assert_eq!(run(&["theory", "--config", &bad], None).status.code(), Some(1));
    assert_eq!(run(&["theory", "--config", "/nonexistent.json"], None).status.code(), Some(1));
    let ok = write(dir.path(), "o.json", r#"{"law":{"kind":"gaussian","sigma2":1.0}}"#);
    assert_eq!(run(&["theory", "--config", &ok], Some("abc")).status.code(), Some(1));
}

#[test]
fn hs_check_default_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"law":{"kind":"gaussian","sigma2":1.0},"theta":2.0}"#);
    let o = run(&["hs-check", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert!(v["check"]["abs_diff"].as_f64().unwrap() < 1e-3);
    assert_eq!(v["pass"], true);
}

#[test]
fn block_variance_from_eigenvalue_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"law":{"kind":"gaussian","sigma2":1.0},"theta":2.0,"seed":3,"block":{"mc_trials":4,"grid":{"nx":24,"ny":24,"y_min":0.0}}}"#,
    );
    let eig: String = (0..60).map(|i| format!("{}\n", -0.3 + 0.01 * i as f64)).collect();
    let csv = write(dir.path(), "e.csv", &eig);
    let out = dir.path().join("o");
    let o = run(&["block-variance", "--config", &cfg, "--sub-a", &csv, "--haar-seed", "7", "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["size"], 61);
    assert!(v["estimate"]["var_zn"].as_f64().unwrap() > 0.0);
    assert_eq!(v["rotation"]["haar"], 7);
}

#[test]
fn validate_detects_wrong_reference_law() {
    let dir = tempfile::tempdir().unwrap();
    let gauss = write(
        dir.path(),
        "g.json",
        r#"{"kind":"eigenvalue","n":150,"trials":150,"law":{"kind":"gaussian","sigma2":1.0},"seed":5}"#,
    );
    let out = dir.path().join("o");
    let o = run(&["simulate", "--config", &gauss, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0));
    let samples = String::from_utf8_lossy(&o.stdout).lines().next().unwrap().to_string();
    let own = run(&["validate", "--samples", &samples, "--out", out.to_str().unwrap()], None);
    assert_eq!(own.status.code(), Some(0), "{}", String::from_utf8_lossy(&own.stdout));
    // a much wider entry law: the sample variance is far from the reference
    let wide = write(
        dir.path(),
        "w.json",
        r#"{"kind":"eigenvalue","n":150,"trials":150,"law":{"kind":"laplace","sigma2":2.0},"seed":5}"#,
    );
    let other = run(&["validate", "--samples", &samples, "--config", &wide, "--out", out.to_str().unwrap()], None);
    assert_eq!(other.status.code(), Some(3));
    assert_eq!(stdout_json(&other)["pass"], false);
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"kind":"quadratic_form","n":50,"trials":5,"law":{"kind":"uniform","sigma2":1.0},"seed":1,"z_pairs":[[[0.0,1.0],[0.0,1.0]]]}"#,
    );
    let seed_of = |args: &[&str], env: Option<&str>| -> u64 {
        let out = tempfile::tempdir().unwrap();
        let mut a = vec!["simulate", "--config", cfg.as_str(), "--out", out.path().to_str().unwrap()];
        a.extend_from_slice(args);
        let o = run(&a, env);
        assert_eq!(o.status.code(), Some(0));
        let json = String::from_utf8_lossy(&o.stdout).lines().next().unwrap().to_string();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
        v["seed_base"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&[], None), 1);
    assert_eq!(seed_of(&[], Some("8")), 8);
    assert_eq!(seed_of(&["--seed", "9"], Some("8")), 9);
}
