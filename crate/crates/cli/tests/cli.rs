use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn membrane(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_membrane")).args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn solve_circle_member_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("solve");
    let out = membrane(&["cylinder", "solve", "--upsilon", "5", "--rho", "0", "--out-dir", out_dir.to_str().unwrap()]);
    let v = json_stdout(&out);
    let s = v["varsigma"].as_f64().unwrap();
    let r = v["radius"].as_f64().unwrap();
    assert!((s + 24f64.cbrt()).abs() <= 1e-10, "{s}");
    assert!((r - 4.0 * 3f64.cbrt()).abs() <= 1e-8, "{r}");
    for f in ["directrix.json", "directrix.csv", "directrix.svg"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let saved = read_json(&out_dir.join("directrix.json"));
    assert_eq!(saved["varsigma"], v["varsigma"]);
    let svg = std::fs::read_to_string(out_dir.join("directrix.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn provenance_is_deterministic() {
    let a = json_stdout(&membrane(&["cylinder", "solve", "--upsilon", "3", "--rho", "0.2", "--samples", "64"]));
    let b = json_stdout(&membrane(&["cylinder", "solve", "--upsilon", "3", "--rho", "0.2", "--samples", "64"]));
    assert_eq!(a, b);
    let hash = a["provenance"]["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 64);
    let c = json_stdout(&membrane(&["cylinder", "solve", "--upsilon", "3", "--rho", "0.25", "--samples", "64"]));
    assert_ne!(c["provenance"]["config_hash"].as_str().unwrap(), hash);
}

#[test]
fn derive_coeffs_text() {
    let out = membrane(&["derive-coeffs", "--phi", "willmore"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let names: Vec<&str> = text.lines().filter_map(|l| l.split(" = ").next()).collect();
    assert_eq!(names, ["B1", "B2", "D1", "D2"]);
    // D1 and D2 carry ℓ through the δ derivatives.
    assert!(text.lines().nth(2).unwrap().contains('l'));
}

#[test]
fn build_march_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("circle.json");
    std::fs::write(&spec, r#"{"kind": "circle", "radius": 1.0}"#).unwrap();
    let curve = spec.to_str().unwrap();

    let built = dir.path().join("curve.json");
    let out = membrane(&["cauchy", "build", "--curve", curve, "--h", "0.5", "--n", "32", "--out", built.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&built);
    assert!(v["residuals"]["max"].as_f64().unwrap() < 1e-12);

    let patch = dir.path().join("patch.json");
    let obj = dir.path().join("patch.obj");
    let out = membrane(&[
        "cauchy", "march", "--curve", curve, "--h", "0.5", "--n", "64", "--steps", "16", "--dy", "0.015625",
        "--out", patch.to_str().unwrap(), "--obj", obj.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_json(&patch)["rows"], 17);
    let mesh = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(mesh.lines().filter(|l| l.starts_with("v ")).count(), 64 * 17);

    for input in [&built, &patch] {
        let v = json_stdout(&membrane(&["verify", input.to_str().unwrap()]));
        assert_eq!(v["failing"].as_array().unwrap().len(), 0);
    }
    // An impossible tolerance turns into an invariant failure.
    let out = membrane(&["verify", patch.to_str().unwrap(), "--tol", "1e-20"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn inadmissible_data_exits_2() {
    let out = membrane(&["cauchy", "build", "--curve", r#"{"kind":"circle"}"#, "--h", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("inadmissible"));
}

#[test]
fn malformed_inputs_exit_2() {
    let out = membrane(&["cauchy", "build", "--curve", r#"{"kind":"spiral"}"#, "--h", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = membrane(&["cauchy", "build", "--curve", "/nonexistent/curve.json", "--h", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = membrane(&["cauchy", "build", "--curve", r#"{"kind":"circle"}"#, "--h", "0.5", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = membrane(&["cylinder", "solve", "--upsilon", "4", "--mu", "2", "--rho", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = membrane(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let target = blocker.join("out.json");
    let out = membrane(&["cylinder", "separatrices", "--upsilon", "5", "--rho-max", "0.2", "--out", target.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sweep_preserves_grid_order() {
    let v = json_stdout(&membrane(&["cylinder", "sweep", "--upsilon", "5", "--rho-grid", "0.08:0.9:3", "--samples", "300"]));
    let rows = v["rows"].as_array().unwrap();
    let rhos: Vec<f64> = rows.iter().map(|r| r["rho"].as_f64().unwrap()).collect();
    assert_eq!(rhos.len(), 3);
    assert!(rhos.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(rows[0]["convexity"], "strict");
    assert_eq!(rows[2]["transversal"], 20);
}

#[test]
fn mesh_obj_carries_curvatures() {
    let dir = tempfile::tempdir().unwrap();
    let obj = dir.path().join("c.obj");
    let v = json_stdout(&membrane(&[
        "cylinder", "mesh", "--upsilon", "5", "--rho", "0.3", "--samples", "64", "--levels", "4",
        "--out", obj.to_str().unwrap(),
    ]));
    assert_eq!(v["vertices"], 64 * 5 * 4);
    let text = std::fs::read_to_string(&obj).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# curv ")));
    assert_eq!(text.lines().filter(|l| l.starts_with("f ")).count(), 2 * 64 * 5 * 3);
}
