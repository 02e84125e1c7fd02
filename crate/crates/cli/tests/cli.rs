use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn divray(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divray"))
        .args(args)
        .env("DIVRAY_THREADS", "1")
        .output()
        .unwrap()
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn tmp(dir: &tempfile::TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn ok(out: &Output) {
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_spec(dir: &tempfile::TempDir, name: &str, json: &str) -> String {
    let path: PathBuf = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn phantom_norm_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let field = tmp(&dir, "g.tfld");
    ok(&divray(&[
        "phantom",
        &scenario("gaussian.json"),
        &field,
        "--size",
        "128",
    ]));
    let out = divray(&["norms", &field]);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    let norm: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    // (|1| + |-0.5|) * ||exp(-1.5 |x|^2)||_{L^2} = 1.5 sqrt(pi / 3)
    let exact = 1.5 * (std::f64::consts::PI / 3.0).sqrt();
    assert!((norm - exact).abs() < 1e-10, "{norm} vs {exact}");
}

#[test]
fn zero_field_gives_zero_beams_and_averages() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        &dir,
        "zero.json",
        r#"{"dim":2,"order":1,"center":[0,0],"width":1,"kind":"gaussian-tensor","coefficients":[0,0]}"#,
    );
    let beams = tmp(&dir, "b.tfld");
    let avg = tmp(&dir, "a.tfld");
    ok(&divray(&[
        "forward",
        &spec,
        &beams,
        "--s",
        "0.25",
        "--size",
        "16",
        "--n-angles",
        "8",
    ]));
    ok(&divray(&["average", &beams, &avg]));
    let out = divray(&["norms", &avg]);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
    for line in text.lines() {
        assert!(line.ends_with("norm: 0"), "{line}");
    }
}

#[test]
fn metadata_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let field = tmp(&dir, "g.tfld");
    ok(&divray(&[
        "phantom",
        &scenario("gaussian.json"),
        &field,
        "--size",
        "16",
    ]));
    let out = divray(&[
        "forward",
        &field,
        &tmp(&dir, "b.tfld"),
        "--weight",
        "0",
        "--m",
        "2",
        "--n-angles",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("metadata mismatch"));
    let out = divray(&["forward", &field, &tmp(&dir, "b.tfld"), "--weight", "0", "--s", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = divray(&["average", &field, &tmp(&dir, "a.tfld")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn spectral_pipeline_and_quality_gate() {
    let dir = tempfile::tempdir().unwrap();
    let (beams, avg, rec, report) = (
        tmp(&dir, "b.tfld"),
        tmp(&dir, "a.tfld"),
        tmp(&dir, "r.tfld"),
        tmp(&dir, "r.json"),
    );
    let spec = scenario("vector.json");
    ok(&divray(&[
        "forward", &spec, &beams, "--s", "0.25", "--size", "64", "--m", "1",
    ]));
    ok(&divray(&["average", &beams, &avg, "--s", "0.25"]));
    let out = divray(&[
        "reconstruct",
        &avg,
        &rec,
        "--method",
        "spectral-vec",
        "--reference",
        &spec,
        "--report",
        &report,
    ]);
    ok(&out);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let err = json["relative_l2"].as_f64().unwrap();
    assert!(err < 5e-2, "{err:e}");
    assert_eq!(json["zero_mode_unrecoverable"], true);
    let out = divray(&[
        "reconstruct",
        &avg,
        &rec,
        "--method",
        "spectral-vec",
        "--reference",
        &spec,
        "--max-rel-l2",
        "1e-12",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let out = divray(&["reconstruct", &avg, &rec, "--method", "spectral-2t"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pointwise_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let (beams, rec, report) = (tmp(&dir, "b.tfld"), tmp(&dir, "r.tfld"), tmp(&dir, "r.json"));
    let spec = scenario("gaussian.json");
    ok(&divray(&[
        "forward",
        &spec,
        &beams,
        "--weight",
        "1",
        "--directions",
        "pointwise",
        "--size",
        "16",
        "--length",
        "1",
    ]));
    ok(&divray(&[
        "reconstruct",
        &beams,
        &rec,
        "--method",
        "pointwise",
        "--reference",
        &spec,
        "--report",
        &report,
    ]));
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(json["relative_l2"].as_f64().unwrap() < 1e-2);
    let out = divray(&[
        "forward",
        &spec,
        &beams,
        "--weight",
        "0",
        "--n-angles",
        "3",
        "--size",
        "16",
        "--length",
        "1",
    ]);
    ok(&out);
    let out = divray(&["reconstruct", &beams, &rec, "--method", "pointwise"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn forward_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = scenario("tensor2.json");
    let run = |name: &str| {
        let path = tmp(&dir, name);
        ok(&divray(&[
            "forward",
            &spec,
            &path,
            "--s",
            "0.75",
            "--size",
            "16",
            "--n-angles",
            "16",
        ]));
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.tfld"), run("b.tfld"));
}

#[test]
fn verify_emits_csv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, jsonl) = (tmp(&dir, "u.csv"), tmp(&dir, "u.jsonl"));
    ok(&divray(&["verify", "--suite", "ucp", "--out", &csv, "--jsonl", &jsonl]));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("experiment,"));
    assert!(!text.contains('\r'));
    let rows = text.lines().count() - 1;
    let lines: Vec<serde_json::Value> = std::fs::read_to_string(&jsonl)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert!(lines.len() >= rows);
    assert_eq!(divray(&["verify", "--suite", "nonsense"]).status.code(), Some(2));
}
