use std::path::PathBuf;

use super::*;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn invoke(args: &[&str], tol: Option<&str>) -> (u8, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("solitonlab").chain(args.iter().copied());
    let code = run(argv, tol, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn invoke_file(cmd: &str, name: &str, extra: &[&str], tol: Option<&str>) -> (u8, String, String) {
    let path = fixture(name);
    let mut args = vec![cmd, path.to_str().unwrap()];
    args.extend_from_slice(extra);
    invoke(&args, tol)
}

#[test]
fn catalog_lists_every_entry() {
    let (code, out, _) = invoke(&["catalog"], None);
    assert_eq!(code, 0);
    for name in ["minkowski", "de_sitter", "grw_flat"] {
        assert!(out.contains(name), "{out}");
    }
    let (code, out, _) = invoke(&["catalog", "--format", "json"], None);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn analyze_passes_on_minkowski() {
    let (code, out, err) = invoke_file("analyze", "minkowski.json", &["--no-timestamp"], None);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "pass");
    assert!(v.get("generated_at").is_none_or(serde_json::Value::is_null));
}

#[test]
fn timestamp_is_present_by_default() {
    let (code, out, _) = invoke_file("verify", "minkowski.json", &[], None);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["generated_at"].as_str().is_some_and(|s| s.ends_with('Z')));
}

#[test]
fn no_timestamp_output_is_byte_stable() {
    let a = invoke_file("analyze", "de-sitter-soliton.json", &["--no-timestamp"], None);
    let b = invoke_file("analyze", "de-sitter-soliton.json", &["--no-timestamp"], None);
    assert_eq!(a.0, 0);
    assert_eq!(a.1, b.1);
}

#[test]
fn verify_skips_the_soliton_solve() {
    let (code, out, _) = invoke_file("verify", "de-sitter-soliton.json", &["--no-timestamp"], None);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["mode"], "verify");
    assert!(!out.contains("lambda_closed_form"));
}

#[test]
fn text_format_ends_with_verdict() {
    let (code, out, _) = invoke_file("analyze", "minkowski.json", &["--format", "text"], None);
    assert_eq!(code, 0);
    assert!(out.trim_end().ends_with("verdict: PASS"), "{out}");
}

#[test]
fn failing_identity_exits_one() {
    let (code, out, _) = invoke_file("analyze", "minkowski-inconsistent.json", &["--no-timestamp"], None);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "fail");
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let (code, out, _) =
        invoke_file("analyze", "minkowski.json", &["--no-timestamp", "--out", target.to_str().unwrap()], None);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.ends_with("}\n"));
}

#[test]
fn schema_error_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"name": "bad", "metric": {"catalog": {"kind": "minkowski"}}, "plan": {"points": [[0,0,0,0]]}, "colour": 1}"#).unwrap();
    let (code, _, err) = invoke(&["analyze", path.to_str().unwrap()], None);
    assert_eq!(code, 2);
    assert!(err.contains("colour"), "{err}");
}

#[test]
fn missing_file_exits_two() {
    let (code, _, err) = invoke(&["verify", "/nonexistent/scenario.json"], None);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
}

#[test]
fn usage_error_exits_two() {
    assert_eq!(invoke(&["frobnicate"], None).0, 2);
    assert_eq!(invoke(&["--help"], None).0, 0);
}

#[test]
fn tolerance_variable_is_validated() {
    assert_eq!(invoke_file("verify", "minkowski.json", &[], Some("abc")).0, 2);
    assert_eq!(invoke_file("verify", "minkowski.json", &[], Some("-1")).0, 2);
    let (code, out, _) = invoke_file("verify", "minkowski.json", &["--no-timestamp"], Some("1e-3"));
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["tolerances"]["identity"], 1e-3);
}

#[test]
fn sweep_reports_each_value() {
    let (code, out, err) = invoke_file(
        "sweep",
        "minkowski.json",
        &["--param", "soliton.lambda", "--values=-1,1", "--no-timestamp"],
        None,
    );
    assert_eq!(code, 1, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let verdicts: Vec<_> = v.as_array().unwrap().iter().map(|r| r["verdict"].clone()).collect();
    assert_eq!(verdicts, ["pass", "fail"]);
}

#[test]
fn sweep_rejects_unknown_path() {
    let (code, _, _) = invoke_file("sweep", "minkowski.json", &["--param", "soliton.nope.x", "--values", "1"], None);
    assert_eq!(code, 2);
}
