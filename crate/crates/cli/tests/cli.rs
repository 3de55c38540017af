use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn domain(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../domains").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyrobin")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn classify_reports_kinds() {
    let out = run(&["classify", path_str(&domain("square.json"))]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["kind"], "ProductOfCircumsolids");
    assert_eq!(v["factors"].as_array().unwrap().len(), 2);
    assert_eq!(v["vertices"].as_array().unwrap().len(), 4);

    let v = json(&run(&["classify", path_str(&domain("triangle.json"))]));
    assert_eq!(v["kind"], "Circumsolid");
    assert!((v["radius"].as_f64().unwrap() - 0.28867513459481287).abs() < 1e-12);

    let v = json(&run(&["classify", path_str(&domain("tstar.json"))]));
    assert_eq!(v["kind"], "Other");
    assert_eq!(v["labels"], serde_json::json!(["other"]));
}

#[test]
fn perturbation_field_feeds_the_concavity_check() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("v.csv");
    let mesh = dir.path().join("v.off");
    let out = run(&[
        "perturbation",
        path_str(&domain("tstar.json")),
        "--h",
        "0.03",
        "--field",
        path_str(&field),
        "--export-mesh",
        path_str(&mesh),
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["mu"].as_f64().unwrap() - (6.0 + 2f64.sqrt()) / 2.5).abs() < 1e-12);
    assert!(dir.path().join("v.tags").exists());
    let header = std::fs::read_to_string(&field).unwrap();
    assert!(header.starts_with("node_index,x,y,value\n"));

    let fine = dir.path().join("fine.csv");
    let fine_mesh = dir.path().join("fine.off");
    let out = run(&[
        "perturbation",
        path_str(&domain("tstar.json")),
        "--h",
        "0.03",
        "--refine",
        "1",
        "--field",
        path_str(&fine),
        "--export-mesh",
        path_str(&fine_mesh),
    ]);
    assert_eq!(code(&out), 0);

    let out = run(&["concavity", path_str(&field), "--refined", path_str(&fine)]);
    assert_eq!(code(&out), 10, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["certificate"], true);
    assert_eq!(r["report"]["stable"], true);
    assert!(r["report"]["max_gap"].as_f64().unwrap() > 1e-3);

    // The perturbation field changes sign, so the log test is not applicable.
    let out = run(&["concavity", path_str(&field), "--mode", "log"]);
    assert_eq!(code(&out), 8);
}

#[test]
fn product_domain_gives_no_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("u.csv");
    let mesh = dir.path().join("u.off");
    let out = run(&[
        "robin",
        path_str(&domain("square.json")),
        "--alpha",
        "1",
        "--h",
        "0.05",
        "--field",
        path_str(&field),
        "--export-mesh",
        path_str(&mesh),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&["concavity", path_str(&field), "--mode", "log"]);
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["certificate"], false);
    assert_eq!(r["report"]["violations"], serde_json::json!([]));
}

#[test]
fn robin_output_is_deterministic() {
    let args = ["robin", path_str(&domain("tstar.json")).to_owned().leak(), "--alpha", "0.5", "--h", "0.05"];
    let a = run(&args);
    let b = run(&args);
    let c = Command::new(env!("CARGO_BIN_EXE_polyrobin"))
        .args(args)
        .env("POLYROBIN_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn sweep_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        path_str(&domain("square.json")),
        "--alphas",
        "0,0.5,1",
        "--h",
        "0.1",
        "--out",
        path_str(&out_path),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(out_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,lambda0,lambda1,dlambda,gap,residual");
    assert_eq!(lines.len(), 4);
}

#[test]
fn corner_reports_the_critical_mode() {
    let out = run(&[
        "corner",
        path_str(&domain("tstar.json")),
        "--vertex",
        "2",
        "--radius",
        "0.2",
        "--h",
        "0.05",
        "--grade",
        "2",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!((v["beta"][1].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-14);
    assert!((v["f"][1].as_f64().unwrap() + 0.657).abs() < 0.01);
    assert_eq!(v["diagnostics"]["critical"][1], true);

    let out = run(&["corner", path_str(&domain("tstar.json")), "--vertex", "2", "--radius", "5", "--h", "0.05"]);
    assert_eq!(code(&out), 7);
}

#[test]
fn pruefer_scan_finds_admissible_values() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("scan.json");
    let out = run(&["pruefer", "--d", "3", "--scan", "0:5:0.25", "--json", path_str(&report)]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("mu,sigma_gap,crossings,admissible\n"));
    assert_eq!(text.lines().count(), 22);
    let scan: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    let mus: Vec<f64> = scan["admissible"].as_array().unwrap().iter().map(|o| o["mu"].as_f64().unwrap()).collect();
    assert_eq!(mus.len(), 3);
    for (m, e) in mus.iter().zip([0.0, 1.0, 4.0]) {
        assert!((m - e).abs() < 1e-3, "{mus:?}");
    }

    let out = run(&["pruefer", "--d", "3", "--mu", "1.0..1.2", "--grid-step", "0.1"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 4);
}

#[test]
fn ball_matches_closed_form() {
    let out = run(&["ball", "--d", "3", "--alpha", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert!((v["lambda"].as_f64().unwrap() - std::f64::consts::PI.powi(2) / 4.0).abs() < 1e-6);
    assert_eq!(v["log_concave"], true);
}

#[test]
fn gapcheck_requires_a_product_domain() {
    let out = run(&["gapcheck", path_str(&domain("tstar.json")), "--alphas", "1", "--h", "0.1"]);
    assert_eq!(code(&out), 3);
    let out = run(&["gapcheck", path_str(&domain("tstar.json")), "--alphas", "1", "--h", "0.1", "--force"]);
    assert_eq!(code(&out), 0);
    let out = run(&["gapcheck", path_str(&domain("rectangle.json")), "--alphas", "0,1,5", "--h", "0.1"]);
    let v = json(&out);
    for e in v["entries"].as_array().unwrap() {
        assert_eq!(e["flagged"], false);
    }
}

#[test]
fn converge_reports_clipped_domains() {
    let out = run(&[
        "converge",
        path_str(&domain("square.json")),
        "--h",
        "0.1",
        "--levels",
        "2",
        "--clip",
        "0.1",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["study"]["levels"].as_array().unwrap().len(), 2);
    let h = v["clipped"][0]["hausdorff"].as_f64().unwrap();
    assert!((h - 0.1 / 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn errors_map_to_documented_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let unbounded = dir.path().join("strip.json");
    std::fs::write(&unbounded, r#"{"dim":2,"halfspaces":[{"normal":[0,1],"offset":1},{"normal":[0,-1],"offset":0}]}"#).unwrap();
    let garbage = dir.path().join("bad.json");
    std::fs::write(&garbage, "{").unwrap();

    assert_eq!(code(&run(&["classify"])), 2);
    assert_eq!(code(&run(&["classify", "/does/not/exist.json"])), 4);
    assert_eq!(code(&run(&["classify", path_str(&garbage)])), 4);
    assert_eq!(code(&run(&["classify", path_str(&unbounded)])), 5);
    let square = path_str(&domain("square.json")).to_owned();
    assert_eq!(code(&run(&["robin", &square, "--alpha", "1", "--refine", "9"])), 3);
    assert_eq!(code(&run(&["robin", &square, "--alpha=-1"])), 3);
    assert_eq!(code(&run(&["converge", &square, "--levels", "9"])), 3);
    assert_eq!(code(&run(&["pruefer", "--d", "2", "--mu", "1"])), 3);
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_polyrobin"))
        .args(["ball", "--d", "3", "--alpha", "1"])
        .env("POLYROBIN_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&bad_threads), 3);

    let help = String::from_utf8(run(&["--help"]).stdout).unwrap();
    for c in ["10", "3", "4", "5", "6", "7", "8"] {
        assert!(help.contains(&format!("  {c:>2}  ")), "exit code {c} missing from --help");
    }
}
