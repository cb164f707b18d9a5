use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_orlicz-duality"))
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn levy_csv_has_one_row_per_step() {
    let o = run(&["levy", "--bx", "-2", "--nmax", "5", "--out", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,K_n,B_n,C_n,value_n,residual_B2"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 6);
        assert_eq!(r[0], (i + 1) as f64);
        assert!(r[5].abs() < 1e-10, "residual {}", r[5]);
    }
    let first = text.lines().nth(1).unwrap();
    let digits = first
        .split(',')
        .nth(1)
        .unwrap()
        .split('e')
        .next()
        .unwrap()
        .replace(['.', '-'], "");
    assert_eq!(digits.len(), 17);
}

#[test]
fn gap_reports_strict_gap() {
    let v = json(&run(&["gap", "--N", "40", "--report", "json"]));
    assert_eq!(v["strict_gap"], Value::Bool(true));
    assert_eq!(v["certificate"]["strict_gap"], Value::Bool(true));
    let c = v["certificate"]["u_over_c"].as_f64().unwrap();
    let b = v["certificate"]["u_over_bipolar"].as_f64().unwrap();
    assert!(c < b);
}

#[test]
fn binomial_exponential_values() {
    let v = json(&run(&[
        "solve",
        "--market",
        &data("binomial.json"),
        "--utility",
        "exp",
    ]));
    assert_eq!(v["schema_version"], 1);
    let p = v["primal"]["value"].as_f64().unwrap();
    let d = v["dual"]["value"].as_f64().unwrap();
    assert!((p + 1.0).abs() < 1e-6, "{p}");
    assert!((d + 1.0).abs() < 1e-6, "{d}");
}

#[test]
fn utility_as_inline_json() {
    let spec = r#"{"family":"exponential","params":{"rate":2.0}}"#;
    let v = json(&run(&[
        "solve",
        "--market",
        &data("binomial.json"),
        "--utility",
        spec,
    ]));
    // U(x) = -e^{-2x}/2 and theta = 0
    assert!((v["primal"]["value"].as_f64().unwrap() + 0.5).abs() < 1e-6);
}

#[test]
fn skewed_market_csv_and_agreement() {
    let o = run(&[
        "solve",
        "--market",
        &data("skewed.json"),
        "--utility",
        "log:2",
        "--report",
        "csv",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 4);
    let v = json(&run(&[
        "solve",
        "--market",
        &data("skewed.json"),
        "--utility",
        "log:2",
    ]));
    assert!(v["duality_gap"].as_f64().unwrap().abs() < 1e-6);
}

#[test]
fn conjugate_points() {
    let v = json(&run(&["conjugate", "--utility", "exp", "--y", "0.5,1,2"]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let y = 2.0f64;
    assert!((rows[2]["v"].as_f64().unwrap() - (y * y.ln() - y)).abs() < 1e-12);
}

#[test]
fn orlicz_operations() {
    let v = json(&run(&[
        "orlicz",
        "--phi",
        "exp",
        "--var",
        &data("variable.json"),
        "--op",
        "norm",
    ]));
    let n = v["result"]["value"].as_f64().unwrap();
    assert!(n > 0.0 && n.is_finite());
    let v = json(&run(&[
        "orlicz",
        "--phi",
        "power:2",
        "--var",
        &data("variable.json"),
        "--op",
        "modular",
        "--scale",
        "1",
    ]));
    // E[|X|^2] = 0.25 + 1 + 0.125
    assert!((v["result"]["value"].as_f64().unwrap() - 1.375).abs() < 1e-12);
    let v = json(&run(&[
        "orlicz", "--phi", "exp", "--var", "shock:4", "--op", "modular", "--scale", "0.5",
    ]));
    assert!(v["result"]["value"].as_f64().unwrap().is_finite());
}

#[test]
fn malformed_input_exits_one() {
    let dir = std::env::temp_dir().join(format!("orlicz-duality-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"probs\": [0.5, 0.6], \"generators\": []}").unwrap();
    let cases: Vec<Vec<String>> = vec![
        vec!["solve".into(), "--market".into(), bad.display().to_string()],
        vec![
            "solve".into(),
            "--market".into(),
            "/nonexistent/market.json".into(),
        ],
        vec![
            "solve".into(),
            "--market".into(),
            data("binomial.json"),
            "--utility".into(),
            "power:7".into(),
        ],
        vec![
            "orlicz".into(),
            "--phi".into(),
            "nope".into(),
            "--op".into(),
            "delta2".into(),
        ],
        vec!["gap".into(), "--N".into(), "1".into()],
        vec!["levy".into(), "--nmax".into(), "zero".into()],
    ];
    for args in cases {
        let o = bin().args(&args).output().unwrap();
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn output_is_deterministic() {
    for args in [
        vec!["levy", "--nmax", "8", "--out", "csv"],
        vec!["gap", "--N", "30", "--seed", "7"],
    ] {
        let a = run(&args);
        let b = bin()
            .args(&args)
            .env("ORLICZ_DUALITY_THREADS", "1")
            .output()
            .unwrap();
        assert!(a.status.success() && b.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = bin()
        .args(["levy", "--nmax", "2"])
        .env("ORLICZ_DUALITY_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn acceptance_matrix_lists_every_criterion() {
    let o = run(&["acceptance"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 10);
    let failing = text.lines().filter(|l| l.ends_with("FAIL")).count();
    assert_eq!(o.status.code(), Some(if failing == 0 { 0 } else { 2 }));
}
