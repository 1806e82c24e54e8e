use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
nx = 12
ny = 12
nz = 12
seed = 5
max_mode = 3
norm_target = "h2"
norm_target_value = 2.0
alphas = [4.0]
epsilons = [0.4, 0.2, 0.1]
t_end = 0.05
dt_max = 0.01
outputs = 4
"#;

fn hydrolimit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydrolimit"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_passes() {
    let out = hydrolimit(&["validate"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn fit_exit_code_follows_the_band() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("pts.csv");
    fs::write(&csv, "eps,total\n0.2,0.04\n0.1,0.01\n0.05,0.0025\n").unwrap();
    let ok = hydrolimit(&["fit", "--csv", s(&csv), "--alpha", "4"]);
    assert_eq!(ok.status.code(), Some(0));
    let fit: serde_json::Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!((fit["slope"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    let off = hydrolimit(&[
        "fit",
        "--csv",
        s(&csv),
        "--alpha",
        "3",
        "--tolerance",
        "0.4",
    ]);
    assert_eq!(off.status.code(), Some(1));
    fs::write(&csv, "eps,total\n0.2,0.04\n").unwrap();
    assert_eq!(
        hydrolimit(&["fit", "--csv", s(&csv), "--alpha", "4"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn run_and_compare_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let (nse, pe) = (dir.path().join("nse"), dir.path().join("pe"));
    let a = hydrolimit(&[
        "run-nse",
        "--config",
        &cfg,
        "--out",
        s(&nse),
        "--eps",
        "0.2",
        "--alpha",
        "4",
    ]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stderr)
    );
    let b = hydrolimit(&["run-pe", "--config", &cfg, "--out", s(&pe)]);
    assert_eq!(
        b.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&b.stderr)
    );
    assert!(nse.join("ledger.csv").exists() && pe.join("monitor.csv").exists());
    assert_eq!(fs::read_dir(&nse).unwrap().count(), 6);

    let report = dir.path().join("report.json");
    let c = hydrolimit(&[
        "compare",
        "--nse",
        s(&nse),
        "--pe",
        s(&pe),
        "--h1",
        "--out",
        s(&report),
    ]);
    assert_eq!(
        c.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&c.stderr)
    );
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["eps"], 0.2);
    assert!(r["total"].as_f64().unwrap() > 0.0);
    assert!(r["total_h1"].is_number());
    assert!((r["T"].as_f64().unwrap() - 0.05).abs() < 1e-12);

    // swapped arguments are refused
    assert_eq!(
        hydrolimit(&["compare", "--nse", s(&pe), "--pe", s(&nse)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_writes_outputs_and_reports_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONFIG);
    let out = dir.path().join("sweep");
    let r = hydrolimit(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        s(&out),
        "--workers",
        "2",
    ]);
    assert!(
        matches!(r.status.code(), Some(0 | 1)),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    for name in [
        "manifest.json",
        "rates.csv",
        "reports.csv",
        "rate_a4.svg",
        "summary.txt",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    let rates = fs::read_to_string(out.join("rates.csv")).unwrap();
    assert!(rates.starts_with("alpha,beta_predicted,slope,residual,pass"));
    let pass = rates.lines().nth(1).unwrap().ends_with("true");
    assert_eq!(r.status.code(), Some(if pass { 0 } else { 1 }));
    assert_eq!(
        String::from_utf8(r.stdout).unwrap(),
        fs::read_to_string(out.join("summary.txt")).unwrap()
    );
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{CONFIG}\nunknown_key = 1\n"));
    assert_eq!(
        hydrolimit(&["sweep", "--config", &cfg]).status.code(),
        Some(2)
    );
    assert_eq!(
        hydrolimit(&["sweep", "--config", "/nonexistent.toml"])
            .status
            .code(),
        Some(2)
    );
}
