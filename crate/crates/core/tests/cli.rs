use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples_data").join(name)
}

fn ibvp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ibvp")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

/// The example file with one edit applied to its JSON.
fn edited(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let mut v: serde_json::Value = serde_json::from_str(include_str!("../examples_data/example.json")).unwrap();
    edit(&mut v);
    let path = dir.join("edited.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn analyze_example_passes_and_reports_discrepancies() {
    let o = ibvp(&["analyze", data("example.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    let keys: Vec<&str> = r["discrepancies"].as_array().unwrap().iter().map(|d| d["key"].as_str().unwrap()).collect();
    assert_eq!(keys, ["alpha_tilde_delta_1", "c"]);
    assert_eq!(r["cone"]["c"], "1/7");
    assert!(stderr(&o).contains("warning: equation 1: 0 <= L(w)"));
}

#[test]
fn strict_turns_hypothesis_warnings_into_failure() {
    let o = ibvp(&["analyze", "--strict", data("example.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("error: equation 2: 0 <= L(w)"));
}

#[test]
fn flags_override_the_file() {
    let f = data("example.json");
    let o = ibvp(&["analyze", f.to_str().unwrap(), "--rho", "1/8, 1, 16", "--pattern", "s3", "--numeric"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["mode"], "numeric");
    assert_eq!(r["certificates"][0]["rho"], serde_json::json!(["1/8", "1", "16"]));

    let o = ibvp(&["analyze", f.to_str().unwrap(), "--rho", "1/8,x,11"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--rho"));
    let o = ibvp(&["analyze", f.to_str().unwrap(), "--pattern", "S3", "--rho", "1/8,1"]);
    assert_eq!(code(&o), 1, "wrong ladder length is a failed check");
}

#[test]
fn zero_problem_has_no_certificate() {
    let o = ibvp(&["analyze", data("zero.json").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let r = json(&o);
    assert!(r["certificates"][0]["certificate"].is_null());

    let o = ibvp(&["solve", data("zero.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let s = &json(&o)["solutions"];
    assert_eq!(s.as_array().unwrap().len(), 1);
    // damped Picard from a constant start halves the error each step
    for x in s[0]["sup_norms"].as_array().unwrap() {
        assert!(x.as_f64().unwrap() < 1e-11);
    }
}

#[test]
fn input_errors_exit_with_2_and_name_the_assumption() {
    let dir = tempfile::tempdir().unwrap();
    let f = edited(dir.path(), |v| v["equations"][0]["alpha"] = serde_json::json!({"atoms": [{"at": "1/5", "weight": 1}]}));
    let o = ibvp(&["analyze", f.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("continuous at tau_i"), "{}", stderr(&o));

    let f = edited(dir.path(), |v| {
        v["equations"][0]["bc"]["a1"] = 0.into();
        v["equations"][0]["bc"]["b1"] = 0.into();
    });
    let o = ibvp(&["analyze", f.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("boundary coefficients"), "{}", stderr(&o));

    let f = edited(dir.path(), |v| {
        v["equations"][0]["window"] = serde_json::json!(["1/10", "3/4"]);
        v["equations"][1]["H"]["h1"] = "1/10".into();
    });
    let e = stderr(&ibvp(&["analyze", f.to_str().unwrap()]));
    assert!(e.contains("2 violation(s)") && e.contains("kernel window") && e.contains("growth of H_i"), "{e}");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"name\": \"x\",\n  \"equations\": [\n").unwrap();
    let o = ibvp(&["analyze", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    assert_eq!(code(&ibvp(&["analyze", "/nonexistent/problem.json"])), 2);
    assert_eq!(code(&ibvp(&["solve", data("linear.json").to_str().unwrap(), "--damping", "0"])), 2);
}

#[test]
fn solve_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("linear.csv");
    let out = dir.path().join("solve.json");
    let f = data("linear.json");
    let o = ibvp(&["solve", f.to_str().unwrap(), "--csv", csv.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(r["solutions"].as_array().unwrap().len(), 1);

    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,u,v"));
    // u = t(1-t)/2 at t = 1/2
    let mid: Vec<&str> = lines.find(|l| l.split(',').next().unwrap().parse::<f64>().unwrap() == 0.5).unwrap().split(',').collect();
    assert!((mid[1].parse::<f64>().unwrap() - 0.125).abs() < 1e-4);

    let o = ibvp(&["verify", f.to_str().unwrap(), "--solution", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["pass"], true);

    // perturb one interior value
    let tampered = dir.path().join("tampered.csv");
    let mut rows: Vec<String> = text.lines().map(String::from).collect();
    let k = rows.len() / 3;
    let mut cells: Vec<String> = rows[k].split(',').map(String::from).collect();
    cells[1] = format!("{}", cells[1].parse::<f64>().unwrap() + 1e-3);
    rows[k] = cells.join(",");
    std::fs::write(&tampered, rows.join("\n")).unwrap();
    let o = ibvp(&["verify", f.to_str().unwrap(), "--solution", tampered.to_str().unwrap()]);
    assert_eq!(code(&o), 1);

    let o = ibvp(&["verify", data("example.json").to_str().unwrap(), "--solution", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "grid of another problem");
}

#[test]
fn example_solution_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("ex.csv");
    let f = data("example.json");
    let o = ibvp(&["solve", f.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["certified_min_solutions"], 2);
    let o = ibvp(&["verify", f.to_str().unwrap(), "--solution", csv.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
